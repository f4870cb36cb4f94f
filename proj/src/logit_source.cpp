#include "pathcal/logit_source.hpp"

namespace pathcal {

std::unique_ptr<DecodeCursor> LogitSource::start(std::span<const TokenId> prompt) const {
  return std::make_unique<ReplayCursor>(*this, prompt);
}

}  // namespace pathcal
