#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "gradlab/quadprob.hpp"

namespace gradlab {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// 53-bit uniform in [0, 1) from the raw engine output, so that the draw does
// not depend on the standard library's distribution implementation.
double unit_uniform(std::mt19937_64& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

}  // namespace

std::vector<double> generate_spectrum(const SpectrumSpec& spec) {
  std::vector<double> out = std::visit(
      overloaded{
          [](const DeAsmundis& s) {
            if (s.n < 2) throw InvalidSpec("DeAsmundis spectrum requires n >= 2");
            if (!(s.ncond > 0.0)) throw InvalidSpec("DeAsmundis spectrum requires ncond > 0");
            std::vector<double> a(static_cast<std::size_t>(s.n));
            const double step = s.ncond / static_cast<double>(s.n - 1);
            for (int i = 1; i <= s.n; ++i) {
              a[static_cast<std::size_t>(i - 1)] = std::pow(10.0, step * static_cast<double>(s.n - i));
            }
            return a;
          },
          [](const ExplicitSpectrum& s) {
            if (s.values.size() < 2) throw InvalidSpec("explicit spectrum needs at least two values");
            for (double v : s.values) {
              if (!(v > 0.0) || !std::isfinite(v)) {
                throw InvalidSpec("explicit eigenvalues must be finite and positive");
              }
            }
            return s.values;
          },
          [](const RandomLogUniform& s) {
            if (s.n < 2) throw InvalidSpec("random spectrum requires n >= 2");
            if (!(s.kappa >= 1.0) || !std::isfinite(s.kappa)) {
              throw InvalidSpec("random spectrum requires finite kappa >= 1");
            }
            std::mt19937_64 engine(s.seed);
            const double top = std::log10(s.kappa);
            std::vector<double> a(static_cast<std::size_t>(s.n));
            a.front() = s.kappa;
            a.back() = 1.0;
            for (int i = 1; i + 1 < s.n; ++i) {
              a[static_cast<std::size_t>(i)] = std::pow(10.0, top * unit_uniform(engine));
            }
            return a;
          },
      },
      spec);
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

}  // namespace gradlab
