#include <cmath>
#include <sstream>

#include "gradlab/steps.hpp"

namespace gradlab {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string tau_label(const TauSchedule& s) {
  switch (s.kind) {
    case TauKind::Constant: {
      std::ostringstream os;
      os << "constant:" << s.value;
      return os.str();
    }
    case TauKind::RatioMu1:
      return "ratio_mu1";
    case TauKind::RatioAlphaScaled:
      return "ratio_alpha";
  }
  return "?";
}

}  // namespace

std::string policy_label(const StepPolicy& policy) {
  return std::visit(overloaded{
                        [](const SteepestDescent&) -> std::string { return "sd"; },
                        [](const BB1&) -> std::string { return "bb1"; },
                        [](const BB2&) -> std::string { return "bb2"; },
                        [](const RBB& p) { return "rbb[" + tau_label(p.schedule) + "]"; },
                        [](const RBBLike& p) {
                          return "rbb_like[m=" + std::to_string(p.m) + "," + tau_label(p.schedule) + "]";
                        },
                        [](const Delayed& p) {
                          std::ostringstream os;
                          os << "delayed[j=" << p.delay << ",p=" << p.power << "]";
                          return os.str();
                        },
                    },
                    policy);
}

void validate(const StepPolicy& policy) {
  std::visit(overloaded{
                 [](const SteepestDescent&) {},
                 [](const BB1&) {},
                 [](const BB2&) {},
                 [](const RBB& p) { validate(p.schedule); },
                 [](const RBBLike& p) {
                   if (p.m < 1) throw InvalidSpec("RBB-like power m must be >= 1");
                   validate(p.schedule);
                 },
                 [](const Delayed& p) {
                   if (p.delay < 0) throw InvalidSpec("delay must be >= 0");
                   if (!(p.power >= 1.0) || !std::isfinite(p.power)) {
                     throw InvalidSpec("delayed power must be finite and >= 1");
                   }
                 },
             },
             policy);
}

}  // namespace gradlab
