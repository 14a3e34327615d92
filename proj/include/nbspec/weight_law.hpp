#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "nbspec/io_util.hpp"
#include "nbspec/rng.hpp"

namespace nbspec {

// Finite-atom probability law for vertex weights. Atoms are kept sorted by
// value (canonical form), all values strictly positive, probabilities in
// (0,1] summing to 1 within 1e-12. Finite support gives exact moments and
// exact size-biasing; continuous laws must be quantized by the caller.
class WeightLaw {
 public:
  struct Atom {
    double value;
    double prob;
  };

  static constexpr double kProbSumTol = 1e-12;

  WeightLaw() = default;

  explicit WeightLaw(std::vector<Atom> atoms) {
    if (atoms.empty()) throw std::invalid_argument("weight law: no atoms");
    std::sort(atoms.begin(), atoms.end(),
              [](const Atom& x, const Atom& y) { return x.value < y.value; });
    double sum = 0.0;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      const Atom& a = atoms[i];
      if (!(a.value > 0.0) || !std::isfinite(a.value))
        throw std::invalid_argument("weight law: atom value must be positive and finite");
      if (!(a.prob > 0.0) || a.prob > 1.0)
        throw std::invalid_argument("weight law: atom probability must be in (0,1]");
      if (i > 0 && !(atoms[i - 1].value < a.value))
        throw std::invalid_argument("weight law: duplicate atom value");
      sum += a.prob;
    }
    if (std::fabs(sum - 1.0) > kProbSumTol)
      throw std::invalid_argument("weight law: probabilities sum to " + fmt_double(sum) +
                                  ", expected 1");
    atoms_ = std::move(atoms);
  }

  static WeightLaw unit() { return WeightLaw({{1.0, 1.0}}); }

  // Parses the CLI syntax "value:prob,value:prob", e.g. "0.5:0.5,1.5:0.5".
  static WeightLaw parse(std::string_view text) {
    std::vector<Atom> atoms;
    for (const std::string& item : split(text, ',')) {
      const auto piece = trim(item);
      if (piece.empty()) throw std::invalid_argument("weight law: empty atom in '" + std::string(text) + "'");
      const auto colon = piece.find(':');
      if (colon == std::string_view::npos)
        throw std::invalid_argument("weight law: atom '" + std::string(piece) + "' is not value:prob");
      std::size_t used = 0;
      double value = 0.0, prob = 0.0;
      try {
        value = std::stod(std::string(piece.substr(0, colon)), &used);
        prob = std::stod(std::string(piece.substr(colon + 1)), &used);
      } catch (const std::exception&) {
        throw std::invalid_argument("weight law: cannot parse atom '" + std::string(piece) + "'");
      }
      atoms.push_back({value, prob});
    }
    return WeightLaw(std::move(atoms));
  }

  const std::vector<Atom>& atoms() const { return atoms_; }
  double phi_min() const { return atoms_.front().value; }
  double phi_max() const { return atoms_.back().value; }
  bool degenerate() const { return atoms_.size() == 1; }

  // k-th moment, exact closed form over atoms.
  double moment(int k) const {
    if (k < 1) throw std::invalid_argument("weight law: moment order must be >= 1");
    double m = 0.0;
    for (const Atom& a : atoms_) m += a.prob * std::pow(a.value, k);
    return m;
  }

  // Size-biased law: prob*_i = value_i * prob_i / Phi^(1). Same atoms.
  WeightLaw size_biased() const {
    const double phi1 = moment(1);
    std::vector<Atom> out;
    out.reserve(atoms_.size());
    for (const Atom& a : atoms_) out.push_back({a.value, a.value * a.prob / phi1});
    return WeightLaw(std::move(out));
  }

  double sample(Rng& rng) const {
    if (atoms_.size() == 1) return atoms_[0].value;
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    double u = u01(rng);
    for (const Atom& a : atoms_) {
      u -= a.prob;
      if (u < 0.0) return a.value;
    }
    return atoms_.back().value;
  }

  // Index of the atom a sampled value came from (values are exact atoms).
  std::size_t atom_index(double value) const {
    for (std::size_t i = 0; i < atoms_.size(); ++i)
      if (atoms_[i].value == value) return i;
    throw std::invalid_argument("weight law: value is not an atom");
  }

  std::string to_string() const {
    std::string out;
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      if (i > 0) out += ',';
      out += fmt_double(atoms_[i].value);
      out += ':';
      out += fmt_double(atoms_[i].prob);
    }
    return out;
  }

  bool operator==(const WeightLaw& other) const {
    if (atoms_.size() != other.atoms_.size()) return false;
    for (std::size_t i = 0; i < atoms_.size(); ++i)
      if (atoms_[i].value != other.atoms_[i].value || atoms_[i].prob != other.atoms_[i].prob)
        return false;
    return true;
  }

 private:
  std::vector<Atom> atoms_;
};

}  // namespace nbspec
