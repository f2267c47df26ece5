#include "fsilab/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <tuple>

namespace fsilab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// FFTW planning is not thread-safe; execution of a finished plan on new arrays is.
struct PlanCache {
  std::mutex mutex;
  std::map<std::tuple<int, int, int>, fftw_plan> plans;
  ~PlanCache() {
    for (auto& [key, plan] : plans) fftw_destroy_plan(plan);
  }
};

PlanCache& plan_cache() {
  static PlanCache cache;
  return cache;
}

fftw_plan get_plan(int dim, int n, int sign) {
  auto& cache = plan_cache();
  std::lock_guard<std::mutex> lock(cache.mutex);
  auto key = std::make_tuple(dim, n, sign);
  auto it = cache.plans.find(key);
  if (it != cache.plans.end()) return it->second;
  std::size_t total = dim == 1 ? n : std::size_t(n) * n;
  auto* buf = fftw_alloc_complex(total);
  fftw_plan plan = dim == 1 ? fftw_plan_dft_1d(n, buf, buf, sign > 0 ? FFTW_BACKWARD : FFTW_FORWARD, FFTW_ESTIMATE)
                            : fftw_plan_dft_2d(n, n, buf, buf, sign > 0 ? FFTW_BACKWARD : FFTW_FORWARD, FFTW_ESTIMATE);
  fftw_free(buf);
  cache.plans.emplace(key, plan);
  return plan;
}

int wrap(int k, int n) { return ((k % n) + n) % n; }

double k_squared(WaveVector k) { return double(k[0]) * k[0] + double(k[1]) * k[1]; }

// (i k)^order
cplx ik_power(int k, int order) {
  double mag = 1.0;
  for (int j = 0; j < order; ++j) mag *= k;
  switch (order % 4) {
    case 0: return {mag, 0.0};
    case 1: return {0.0, mag};
    case 2: return {-mag, 0.0};
    default: return {0.0, -mag};
  }
}

}  // namespace

double torus_measure(int dim) { return dim == 1 ? kTwoPi : kTwoPi * kTwoPi; }

void dft(int dim, int n, std::vector<cplx>& data, int sign) {
  std::size_t total = dim == 1 ? n : std::size_t(n) * n;
  if (data.size() != total) throw std::invalid_argument("dft: size mismatch");
  fftw_plan plan = get_plan(dim, n, sign);
  auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan, ptr, ptr);
}

Displacement::Displacement(int dim, int band) : dim_(dim), band_(band) {
  if (dim != 1 && dim != 2) throw std::invalid_argument("Displacement: interface dimension must be 1 or 2");
  if (band < 0) throw std::invalid_argument("Displacement: negative band limit");
  std::size_t w = 2 * band + 1;
  coeffs_.assign(dim == 1 ? w : w * w, cplx(0.0, 0.0));
}

std::size_t Displacement::index(WaveVector k) const {
  if (dim_ == 1) return std::size_t(k[0] + band_);
  return std::size_t(k[0] + band_) * width() + std::size_t(k[1] + band_);
}

WaveVector Displacement::wave_vector(std::size_t idx) const {
  if (dim_ == 1) return {int(idx) - band_, 0};
  return {int(idx / width()) - band_, int(idx % width()) - band_};
}

cplx Displacement::coeff(WaveVector k) const {
  if (std::abs(k[0]) > band_ || std::abs(k[1]) > band_ || (dim_ == 1 && k[1] != 0)) return {0.0, 0.0};
  return coeffs_[index(k)];
}

void Displacement::set_coeff(WaveVector k, cplx c) {
  if (std::abs(k[0]) > band_ || std::abs(k[1]) > band_ || (dim_ == 1 && k[1] != 0))
    throw std::out_of_range("Displacement::set_coeff: wave vector outside band");
  WaveVector mk{-k[0], -k[1]};
  if (mk == k) c = cplx(c.real(), 0.0);
  coeffs_[index(k)] = c;
  coeffs_[index(mk)] = std::conj(c);
}

Displacement Displacement::from_samples(int dim, int band, int n, const std::vector<double>& values) {
  if (n < 2 * band + 1) throw std::invalid_argument("from_samples: grid too coarse for band");
  std::vector<cplx> buf(values.begin(), values.end());
  dft(dim, n, buf, -1);
  Displacement out(dim, band);
  double scale = 1.0 / (dim == 1 ? n : double(n) * n);
  for (std::size_t i = 0; i < out.coeffs_.size(); ++i) {
    WaveVector k = out.wave_vector(i);
    std::size_t j = dim == 1 ? wrap(k[0], n) : std::size_t(wrap(k[0], n)) * n + wrap(k[1], n);
    out.coeffs_[i] = buf[j] * scale;
  }
  // enforce exact conjugate symmetry
  for (std::size_t i = 0; i < out.coeffs_.size(); ++i) {
    WaveVector k = out.wave_vector(i);
    std::size_t m = out.index({-k[0], -k[1]});
    if (m < i) continue;
    cplx avg = 0.5 * (out.coeffs_[i] + std::conj(out.coeffs_[m]));
    out.coeffs_[i] = avg;
    out.coeffs_[m] = std::conj(avg);
  }
  return out;
}

Displacement Displacement::cosine(int dim, int band, WaveVector k, double amp) {
  Displacement d(dim, band);
  if (k[0] == 0 && k[1] == 0) {
    d.set_coeff(k, amp);
  } else {
    d.set_coeff(k, 0.5 * amp);
  }
  return d;
}

Displacement Displacement::sine(int dim, int band, WaveVector k, double amp) {
  Displacement d(dim, band);
  if (k[0] == 0 && k[1] == 0) return d;
  d.set_coeff(k, cplx(0.0, -0.5 * amp));
  return d;
}

Displacement Displacement::constant(int dim, int band, double value) {
  Displacement d(dim, band);
  d.set_coeff({0, 0}, value);
  return d;
}

double Displacement::evaluate(const double* y, WaveVector order) const {
  double total = 0.0;
  for (std::size_t i = 0; i < coeffs_.size(); ++i) {
    const cplx c = coeffs_[i];
    if (c == cplx(0.0, 0.0)) continue;
    WaveVector k = wave_vector(i);
    double phase = k[0] * y[0] + (dim_ == 2 ? k[1] * y[1] : 0.0);
    cplx factor = ik_power(k[0], order[0]);
    if (dim_ == 2) factor *= ik_power(k[1], order[1]);
    total += (c * factor * cplx(std::cos(phase), std::sin(phase))).real();
  }
  return total;
}

std::vector<double> Displacement::samples(int n, WaveVector order) const {
  std::size_t total = dim_ == 1 ? n : std::size_t(n) * n;
  std::vector<cplx> buf(total, cplx(0.0, 0.0));
  for (std::size_t i = 0; i < coeffs_.size(); ++i) {
    WaveVector k = wave_vector(i);
    cplx factor = ik_power(k[0], order[0]);
    if (dim_ == 2) factor *= ik_power(k[1], order[1]);
    std::size_t j = dim_ == 1 ? wrap(k[0], n) : std::size_t(wrap(k[0], n)) * n + wrap(k[1], n);
    buf[j] += coeffs_[i] * factor;
  }
  dft(dim_, n, buf, +1);
  std::vector<double> out(total);
  for (std::size_t j = 0; j < total; ++j) out[j] = buf[j].real();
  return out;
}

Displacement Displacement::apply_multiplier(const std::function<cplx(WaveVector)>& m) const {
  Displacement out(*this);
  for (std::size_t i = 0; i < coeffs_.size(); ++i) out.coeffs_[i] = coeffs_[i] * m(wave_vector(i));
  return out;
}

Displacement Displacement::derivative(int direction, int order) const {
  return apply_multiplier([&](WaveVector k) { return ik_power(k[direction], order); });
}

Displacement Displacement::laplacian() const {
  return apply_multiplier([](WaveVector k) { return cplx(-k_squared(k), 0.0); });
}

Displacement Displacement::bilaplacian() const {
  return apply_multiplier([](WaveVector k) { return cplx(std::pow(k_squared(k), 2), 0.0); });
}

Displacement Displacement::triharmonic() const {
  return apply_multiplier([](WaveVector k) { return cplx(std::pow(k_squared(k), 3), 0.0); });
}

Displacement Displacement::shifted(double h, int direction) const {
  return apply_multiplier([&](WaveVector k) {
    double phase = k[direction] * h;
    return cplx(std::cos(phase), std::sin(phase));
  });
}

Displacement Displacement::heat_smoothed(double eps) const {
  return apply_multiplier([&](WaveVector k) { return cplx(std::exp(-eps * k_squared(k)), 0.0); });
}

Displacement Displacement::resized(int band) const {
  Displacement out(dim_, band);
  for (std::size_t i = 0; i < out.coeffs_.size(); ++i) out.coeffs_[i] = coeff(out.wave_vector(i));
  return out;
}

double Displacement::mean() const { return coeff({0, 0}).real(); }

double Displacement::sup_norm(int oversample) const {
  int n = std::max(16, oversample * width());
  auto values = samples(n);
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

double Displacement::l2_norm_sq() const { return sobolev_norm_sq(0.0); }

double Displacement::sobolev_norm_sq(double s) const {
  double total = 0.0;
  for (std::size_t i = 0; i < coeffs_.size(); ++i)
    total += std::pow(1.0 + k_squared(wave_vector(i)), s) * std::norm(coeffs_[i]);
  return total * torus_measure(dim_);
}

double Displacement::seminorm_sq(double s) const {
  double total = 0.0;
  for (std::size_t i = 0; i < coeffs_.size(); ++i) {
    double k2 = k_squared(wave_vector(i));
    if (k2 == 0.0) continue;
    total += std::pow(k2, s) * std::norm(coeffs_[i]);
  }
  return total * torus_measure(dim_);
}

double Displacement::reality_defect() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < coeffs_.size(); ++i) {
    WaveVector k = wave_vector(i);
    worst = std::max(worst, std::abs(coeffs_[i] - std::conj(coeffs_[index({-k[0], -k[1]})])));
  }
  return worst;
}

Displacement& Displacement::operator+=(const Displacement& o) {
  if (empty()) {
    *this = o;
    return *this;
  }
  if (o.dim_ != dim_) throw std::invalid_argument("Displacement: dimension mismatch");
  if (o.band_ > band_) *this = resized(o.band_);
  for (std::size_t i = 0; i < o.coeffs_.size(); ++i) coeffs_[index(o.wave_vector(i))] += o.coeffs_[i];
  return *this;
}

Displacement& Displacement::operator-=(const Displacement& o) {
  Displacement neg(o);
  neg *= -1.0;
  return *this += neg;
}

Displacement& Displacement::operator*=(double s) {
  for (auto& c : coeffs_) c *= s;
  return *this;
}

Displacement operator+(Displacement a, const Displacement& b) { return a += b; }
Displacement operator-(Displacement a, const Displacement& b) { return a -= b; }
Displacement operator*(double s, Displacement a) { return a *= s; }
Displacement operator*(Displacement a, double s) { return a *= s; }

double inner_product(const Displacement& a, const Displacement& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("inner_product: dimension mismatch");
  const Displacement& small = a.band() <= b.band() ? a : b;
  const Displacement& large = a.band() <= b.band() ? b : a;
  double total = 0.0;
  const auto& cs = small.coefficients();
  for (std::size_t i = 0; i < cs.size(); ++i)
    total += (cs[i] * std::conj(large.coeff(small.wave_vector(i)))).real();
  return total * torus_measure(a.dim());
}

double elastic_pairing(const Displacement& a, const Displacement& b, double eps) {
  if (a.dim() != b.dim()) throw std::invalid_argument("elastic_pairing: dimension mismatch");
  const Displacement& small = a.band() <= b.band() ? a : b;
  const Displacement& large = a.band() <= b.band() ? b : a;
  double total = 0.0;
  const auto& cs = small.coefficients();
  for (std::size_t i = 0; i < cs.size(); ++i) {
    WaveVector k = small.wave_vector(i);
    double k2 = k_squared(k);
    double weight = k2 * k2 + eps * k2 * k2 * k2;
    if (weight == 0.0) continue;
    total += weight * (cs[i] * std::conj(large.coeff(k))).real();
  }
  return total * torus_measure(a.dim());
}

Displacement product(const Displacement& a, const Displacement& b, int band) {
  if (a.dim() != b.dim()) throw std::invalid_argument("product: dimension mismatch");
  int n = a.band() + b.band() + band + 1;
  n = std::max(n, (3 * std::max({a.band(), b.band(), band}) + 2) / 2 * 2);
  auto fa = a.samples(n);
  auto fb = b.samples(n);
  for (std::size_t j = 0; j < fa.size(); ++j) fa[j] *= fb[j];
  return Displacement::from_samples(a.dim(), band, n, fa);
}

}  // namespace fsilab
