#include "mfg/state.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <string>

#include "mfg/errors.hpp"

namespace mfg {

void validate_state(const MFGState& s, bool check_normalization) {
  if (!s.u.all_finite() || !s.m.all_finite() || !s.V.all_finite() || !std::isfinite(s.hbar))
    throw DomainError("state contains non-finite values");
  if (s.m.grid() != s.u.grid() || s.V.grid() != s.u.grid())
    throw ConfigError("state fields on mismatched grids");
  if (s.m.min() <= 0.0) {
    Index worst = 0;
    s.m.values().minCoeff(&worst);
    throw DomainError("nonpositive density " + std::to_string(s.m.min()) + " at node " +
                      std::to_string(worst));
  }
  if (check_normalization) {
    const double mass_gap = std::abs(integrate(s.m) - 1.0);
    const double mean_gap = std::abs(integrate(s.u).value);
    if (mass_gap > kStateNormTol)
      throw SolveError("density mass deviates from 1 by " + std::to_string(mass_gap));
    if (mean_gap > kStateNormTol)
      throw SolveError("value function mean deviates from 0 by " + std::to_string(mean_gap));
  }
}

void project_normalizations(MFGState& s) {
  s.u.values().array() -= integrate(s.u).value;
  const double mass = integrate(s.m);
  if (!(mass > 0.0)) throw DomainError("density mass " + std::to_string(mass) + " not positive");
  s.m.values() /= mass;
}

void write_checkpoint(std::ostream& os, const MFGState& s) {
  write_field(os, s.u);
  write_field(os, s.m);
  for (int a = 0; a < s.grid().dim(); ++a) write_field(os, s.V.component(a));
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", s.hbar);
  os << "HBAR " << buf << '\n';
}

MFGState read_checkpoint(std::istream& is) {
  MFGState s;
  s.u = read_field(is);
  s.m = read_field(is);
  std::vector<ScalarField> comps;
  for (int a = 0; a < s.u.grid().dim(); ++a) comps.push_back(read_field(is));
  s.V = VectorField(s.u.grid(), std::move(comps));
  std::string tag;
  if (!(is >> tag >> s.hbar) || tag != "HBAR")
    throw ConfigError("checkpoint missing HBAR line");
  validate_state(s, /*check_normalization=*/false);
  return s;
}

}  // namespace mfg
