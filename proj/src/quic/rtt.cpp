#include "qsk/quic/rtt.hpp"

namespace qsk::quic {

void RttEstimator::on_sample(double rtt_ms) {
  latest_ = rtt_ms;
  smoothed_ = smoothed_ ? (*smoothed_ * 7.0 + rtt_ms) / 8.0 : rtt_ms;
  samples_.push_back(rtt_ms);
}

void RttEstimator::reset() {
  smoothed_.reset();
  latest_.reset();
  samples_.clear();
}

}  // namespace qsk::quic
