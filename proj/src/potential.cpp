#include "mather/potential.hpp"

#include <cmath>
#include <fstream>

namespace mather {

TrigPotential::TrigPotential(int d, std::vector<FourierMode> modes)
    : d_(d), modes_(std::move(modes)) {
  if (d_ != 1 && d_ != 2) throw InputError("potential dimension must be 1 or 2");
  for (auto& m : modes_) {
    if (d_ == 1) m.k[1] = 0;
  }
}

double TrigPotential::phase(const FourierMode& m, const Vec& x) const {
  double p = m.k[0] * x[0];
  if (d_ == 2) p += m.k[1] * x[1];
  return kTwoPi * p;
}

double TrigPotential::value(const Vec& x) const {
  double v = 0.0;
  for (const auto& m : modes_) {
    const double p = phase(m, x);
    v += m.a * std::cos(p) + m.b * std::sin(p);
  }
  return v;
}

Vec TrigPotential::gradient(const Vec& x) const {
  Vec g = Vec::Zero(d_);
  for (const auto& m : modes_) {
    const double p = phase(m, x);
    const double s = kTwoPi * (-m.a * std::sin(p) + m.b * std::cos(p));
    for (int i = 0; i < d_; ++i) g[i] += s * m.k[i];
  }
  return g;
}

Mat TrigPotential::hessian(const Vec& x) const {
  Mat h = Mat::Zero(d_, d_);
  for (const auto& m : modes_) {
    const double p = phase(m, x);
    const double s = -kTwoPi * kTwoPi * (m.a * std::cos(p) + m.b * std::sin(p));
    for (int i = 0; i < d_; ++i)
      for (int j = 0; j < d_; ++j) h(i, j) += s * m.k[i] * m.k[j];
  }
  return h;
}

std::vector<double> TrigPotential::third(const Vec& x) const {
  std::vector<double> t(static_cast<std::size_t>(d_ * d_ * d_), 0.0);
  const double c3 = kTwoPi * kTwoPi * kTwoPi;
  for (const auto& m : modes_) {
    const double p = phase(m, x);
    const double s = c3 * (m.a * std::sin(p) - m.b * std::cos(p));
    for (int i = 0; i < d_; ++i)
      for (int j = 0; j < d_; ++j)
        for (int l = 0; l < d_; ++l)
          t[static_cast<std::size_t>((i * d_ + j) * d_ + l)] += s * m.k[i] * m.k[j] * m.k[l];
  }
  return t;
}

TrigPotential TrigPotential::scaled(double factor) const {
  auto modes = modes_;
  for (auto& m : modes) {
    m.a *= factor;
    m.b *= factor;
  }
  return TrigPotential(d_, std::move(modes));
}

double TrigPotential::gradient_bound() const {
  double s = 0.0;
  for (const auto& m : modes_) {
    const double kn = std::hypot(m.k[0], m.k[1]);
    s += kTwoPi * kn * std::hypot(m.a, m.b);
  }
  return s;
}

nlohmann::json TrigPotential::to_json() const {
  nlohmann::json modes = nlohmann::json::array();
  for (const auto& m : modes_) {
    nlohmann::json k = nlohmann::json::array();
    for (int i = 0; i < d_; ++i) k.push_back(m.k[i]);
    modes.push_back({{"k", k}, {"a", m.a}, {"b", m.b}});
  }
  return {{"d", d_}, {"modes", modes}};
}

TrigPotential TrigPotential::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("d") || !j.contains("modes"))
    throw InputError("potential JSON needs \"d\" and \"modes\"");
  if (!j["d"].is_number_integer()) throw InputError("potential \"d\" must be an integer");
  const int d = j["d"].get<int>();
  if (d != 1 && d != 2) throw InputError("potential \"d\" must be 1 or 2");
  if (!j["modes"].is_array()) throw InputError("potential \"modes\" must be an array");
  std::vector<FourierMode> modes;
  for (const auto& jm : j["modes"]) {
    if (!jm.contains("k") || !jm["k"].is_array() || static_cast<int>(jm["k"].size()) != d)
      throw InputError("each mode needs an integer vector \"k\" of length d");
    FourierMode m;
    for (int i = 0; i < d; ++i) {
      if (!jm["k"][i].is_number_integer()) throw InputError("mode frequencies must be integers");
      m.k[i] = jm["k"][i].get<int>();
    }
    m.a = jm.value("a", 0.0);
    m.b = jm.value("b", 0.0);
    modes.push_back(m);
  }
  return TrigPotential(d, std::move(modes));
}

TrigPotential TrigPotential::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open potential file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InputError("malformed potential file " + path + ": " + e.what());
  }
  return from_json(j);
}

TrigPotential cosine_potential(double a, double b) {
  std::vector<FourierMode> modes;
  if (a != 0.0) modes.push_back({{1, 0}, a, 0.0});
  if (b != 0.0) modes.push_back({{2, 0}, b, 0.0});
  return TrigPotential(1, std::move(modes));
}

TrigPotential two_maxima_potential() {
  // Odd modes cancel at x = 0 and x = 1/2, so the two maxima have equal height a2;
  // the curvatures there are -4 pi^2 (4 a2 - 8 a1) = -1 and -4 pi^2 (4 a2 + 8 a1) = -4.
  const double a1 = 3.0 / (64.0 * kPi * kPi);
  const double a2 = 5.0 / (32.0 * kPi * kPi);
  return TrigPotential(1, {{{1, 0}, a1, 0.0}, {{2, 0}, a2, 0.0}, {{3, 0}, -a1, 0.0}});
}

}  // namespace mather
