#include "ivtf/procedure.hpp"

#include <cmath>
#include <fmt/format.h>
#include <type_traits>

#include "ivtf/error.hpp"

namespace ivtf {

namespace {

template <class> inline constexpr bool kAlwaysFalse = false;

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw Error(ErrorCode::kDomain, std::string(what) + " must be finite and > 0");
  }
}

}  // namespace

NuisancePoint NuisancePoint::from_ef(double rho, double ef) {
  if (!(ef >= 1.0)) throw Error(ErrorCode::kDomain, "E[F] must be >= 1");
  return {rho, std::sqrt(ef - 1.0)};
}

void validate(const Procedure& proc) {
  std::visit(
      [](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, TFProcedure>) {
          if (!p.cvf) throw Error(ErrorCode::kDomain, "tF procedure has no critical value function");
        } else {
          require_positive(p.crit, "crit");
          if constexpr (std::is_same_v<T, ThresholdTF> || std::is_same_v<T, HybridAR>) {
            require_positive(p.f_threshold, "f_threshold");
          }
        }
      },
      proc);
}

std::string describe(const Procedure& proc) {
  return std::visit(
      [](const auto& p) -> std::string {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ConventionalT>) {
          return fmt::format("conventional(crit={:.6g})", p.crit);
        } else if constexpr (std::is_same_v<T, ThresholdTF>) {
          return fmt::format("threshold(crit={:.6g}, F>{:.6g})", p.crit, p.f_threshold);
        } else if constexpr (std::is_same_v<T, HybridAR>) {
          return fmt::format("hybrid-ar(crit={:.6g}, F>{:.6g})", p.crit, p.f_threshold);
        } else if constexpr (std::is_same_v<T, PureAR>) {
          return fmt::format("ar(crit={:.6g})", p.crit);
        } else if constexpr (std::is_same_v<T, TFProcedure>) {
          return fmt::format("tf(alpha={:.6g})", p.cvf ? p.cvf->alpha() : 0.0);
        } else {
          static_assert(kAlwaysFalse<T>);
        }
      },
      proc);
}

}  // namespace ivtf
