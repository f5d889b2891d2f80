#include "qsk/dns/message.hpp"

#include <algorithm>
#include <cctype>

namespace qsk::dns {

std::string_view to_string(RecordType t) {
  switch (t) {
    case RecordType::A: return "A";
    case RecordType::AAAA: return "AAAA";
  }
  return "?";
}

std::string_view to_string(Rcode r) {
  switch (r) {
    case Rcode::NoError: return "NOERROR";
    case Rcode::FormErr: return "FORMERR";
    case Rcode::ServFail: return "SERVFAIL";
    case Rcode::NxDomain: return "NXDOMAIN";
    case Rcode::NotImp: return "NOTIMP";
    case Rcode::Refused: return "REFUSED";
  }
  return "?";
}

namespace {

std::vector<std::string_view> split_labels(std::string_view name) {
  std::vector<std::string_view> labels;
  if (name.empty()) return labels;
  std::size_t start = 0;
  for (;;) {
    auto dot = name.find('.', start);
    labels.push_back(name.substr(start, dot == std::string_view::npos ? std::string_view::npos : dot - start));
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  return labels;
}

void encode_name(ByteWriter& w, std::string_view name) {
  for (auto label : split_labels(name)) {
    w.u8(static_cast<std::uint8_t>(label.size()));
    w.text(label);
  }
  w.u8(0);
}

std::string decode_name(ByteView wire, ByteReader& r, const char* field) {
  std::string name;
  std::size_t wire_len = 1;
  std::size_t pos = r.position();
  bool jumped = false;
  int hops = 0;
  for (;;) {
    if (pos >= wire.size()) throw DecodeError(field, "truncated");
    const std::uint8_t len = wire[pos];
    if ((len & 0xC0) == 0xC0) {
      if (pos + 1 >= wire.size()) throw DecodeError(field, "truncated");
      const std::size_t target = ((len & 0x3F) << 8) | wire[pos + 1];
      if (target >= pos || ++hops > 64) throw DecodeError(field, "bad compression pointer");
      if (!jumped) r.take(pos + 2 - r.position(), field);
      jumped = true;
      pos = target;
      continue;
    }
    if ((len & 0xC0) != 0) throw DecodeError(field, "bad label type");
    if (len == 0) {
      if (!jumped) r.take(pos + 1 - r.position(), field);
      break;
    }
    if (pos + 1 + len > wire.size()) throw DecodeError(field, "truncated");
    wire_len += len + 1;
    if (wire_len > kMaxNameLength) throw DecodeError(field, "name too long");
    if (!name.empty()) name += '.';
    name.append(reinterpret_cast<const char*>(wire.data() + pos + 1), len);
    pos += 1 + len;
  }
  return name;
}

}  // namespace

std::string normalize_name(std::string_view name) {
  if (!name.empty() && name.back() == '.') name.remove_suffix(1);
  std::size_t wire_len = 1;
  for (auto label : split_labels(name)) {
    if (label.empty()) throw EncodeError("empty label in name");
    if (label.size() > kMaxLabelLength) throw EncodeError("label longer than 63 bytes");
    wire_len += label.size() + 1;
  }
  if (wire_len > kMaxNameLength) throw EncodeError("name longer than 255 bytes");
  return std::string(name);
}

bool names_equal(std::string_view a, std::string_view b) {
  if (!a.empty() && a.back() == '.') a.remove_suffix(1);
  if (!b.empty() && b.back() == '.') b.remove_suffix(1);
  return std::equal(a.begin(), a.end(), b.begin(), b.end(), [](char x, char y) {
    return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
  });
}

Message make_query(std::uint16_t id, std::string_view name, RecordType type, bool recursion_desired) {
  Message m;
  m.id = id;
  m.recursion_desired = recursion_desired;
  m.question = {normalize_name(name), type};
  return m;
}

Message make_response(const Message& query, Rcode rcode, std::vector<Answer> answers, bool authoritative) {
  Message m;
  m.id = query.id;
  m.response = true;
  m.authoritative = authoritative;
  m.recursion_desired = query.recursion_desired;
  m.rcode = rcode;
  m.question = query.question;
  m.answers = std::move(answers);
  return m;
}

Bytes encode(const Message& m) {
  ByteWriter w;
  w.u16(m.id);
  std::uint16_t flags = static_cast<std::uint16_t>(m.rcode) & 0x0F;
  if (m.response) flags |= 0x8000;
  if (m.authoritative) flags |= 0x0400;
  if (m.recursion_desired) flags |= 0x0100;
  if (m.recursion_available) flags |= 0x0080;
  w.u16(flags);
  w.u16(1);
  if (m.answers.size() > 0xFFFF) throw EncodeError("too many answers");
  w.u16(static_cast<std::uint16_t>(m.answers.size()));
  w.u16(0);
  w.u16(0);
  encode_name(w, normalize_name(m.question.name));
  w.u16(static_cast<std::uint16_t>(m.question.type));
  w.u16(kClassIn);
  for (const auto& a : m.answers) {
    const bool v4 = a.type == RecordType::A;
    if (a.address.is_v4() != v4) throw EncodeError("address family does not match record type");
    encode_name(w, normalize_name(a.name));
    w.u16(static_cast<std::uint16_t>(a.type));
    w.u16(kClassIn);
    w.u32(a.ttl);
    auto octets = a.address.octets();
    w.u16(static_cast<std::uint16_t>(octets.size()));
    w.bytes(octets);
  }
  return std::move(w).take();
}

Message decode(ByteView wire) {
  ByteReader r(wire);
  Message m;
  m.id = r.u16("id");
  const auto flags = r.u16("flags");
  m.response = flags & 0x8000;
  if (((flags >> 11) & 0x0F) != 0) throw DecodeError("opcode", "unsupported");
  m.authoritative = flags & 0x0400;
  if (flags & 0x0200) throw DecodeError("flags", "truncated response");
  m.recursion_desired = flags & 0x0100;
  m.recursion_available = flags & 0x0080;
  const auto rcode = flags & 0x0F;
  if (rcode > 5) throw DecodeError("rcode", "unsupported");
  m.rcode = static_cast<Rcode>(rcode);
  const auto qd = r.u16("qdcount");
  const auto an = r.u16("ancount");
  r.u16("nscount");
  r.u16("arcount");
  if (qd != 1) throw DecodeError("qdcount", "expected one question");

  m.question.name = decode_name(wire, r, "question.name");
  const auto qtype = r.u16("question.type");
  if (qtype != 1 && qtype != 28) throw DecodeError("question.type", "unsupported");
  m.question.type = static_cast<RecordType>(qtype);
  if (r.u16("question.class") != kClassIn) throw DecodeError("question.class", "unsupported");

  for (unsigned i = 0; i < an; ++i) {
    Answer a;
    a.name = decode_name(wire, r, "answer.name");
    const auto type = r.u16("answer.type");
    const auto cls = r.u16("answer.class");
    a.ttl = r.u32("answer.ttl");
    const auto rdlen = r.u16("answer.rdlength");
    auto rdata = r.take(rdlen, "answer.rdata");
    if (cls != kClassIn || (type != 1 && type != 28)) continue;
    a.type = static_cast<RecordType>(type);
    if (type == 1) {
      if (rdlen != 4) throw DecodeError("answer.rdata", "A record must be 4 bytes");
      std::array<std::uint8_t, 4> o{};
      std::copy(rdata.begin(), rdata.end(), o.begin());
      a.address = IpAddress::v4(o);
    } else {
      if (rdlen != 16) throw DecodeError("answer.rdata", "AAAA record must be 16 bytes");
      std::array<std::uint8_t, 16> o{};
      std::copy(rdata.begin(), rdata.end(), o.begin());
      a.address = IpAddress::v6(o);
    }
    m.answers.push_back(std::move(a));
  }
  return m;
}

}  // namespace qsk::dns
