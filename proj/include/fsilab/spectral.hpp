#pragma once

/// @file spectral.hpp
/// @brief Band-limited real fields on the periodic interface [0, 2pi)^d, d in {1, 2}.
///
/// A field is stored by its Fourier coefficients c_k for |k_i| <= band, with
/// eta(y) = sum_k c_k exp(i k.y).  Conjugate symmetry c_{-k} = conj(c_k) keeps
/// the field real.

#include <array>
#include <complex>
#include <functional>
#include <vector>

namespace fsilab {

using cplx = std::complex<double>;
using WaveVector = std::array<int, 2>;  ///< second entry is 0 when d = 1

/// Lebesgue measure of the periodic interface, (2 pi)^d.
double torus_measure(int dim);

/// Complex DFT on an n^d grid (row-major, first coordinate slowest).
/// sign = +1 evaluates sum_k c_k e^{+ik.y_j}; sign = -1 the adjoint sum.  Unnormalized.
void dft(int dim, int n, std::vector<cplx>& data, int sign);

class Displacement {
 public:
  Displacement() = default;
  Displacement(int dim, int band);

  static Displacement zero(int dim, int band) { return Displacement(dim, band); }
  /// Fourier coefficients of grid samples on n^d points; requires n >= 2*band + 1.
  static Displacement from_samples(int dim, int band, int n, const std::vector<double>& values);
  /// amp * cos(k.y) or amp * sin(k.y).
  static Displacement cosine(int dim, int band, WaveVector k, double amp);
  static Displacement sine(int dim, int band, WaveVector k, double amp);
  static Displacement constant(int dim, int band, double value);

  int dim() const { return dim_; }
  int band() const { return band_; }
  int width() const { return 2 * band_ + 1; }
  bool empty() const { return coeffs_.empty(); }

  cplx coeff(WaveVector k) const;
  /// Sets c_k and c_{-k} = conj(c) together.
  void set_coeff(WaveVector k, cplx c);
  const std::vector<cplx>& coefficients() const { return coeffs_; }
  std::vector<cplx>& coefficients() { return coeffs_; }
  WaveVector wave_vector(std::size_t index) const;
  std::size_t index(WaveVector k) const;

  /// Value of d^{order[0]}/dy1 d^{order[1]}/dy2 eta at y.
  double evaluate(const double* y, WaveVector order = {0, 0}) const;
  double operator()(double y) const { return evaluate(&y); }

  /// Values (or derivatives) on the uniform n^d grid y_j = 2 pi j / n.
  std::vector<double> samples(int n, WaveVector order = {0, 0}) const;

  Displacement apply_multiplier(const std::function<cplx(WaveVector)>& m) const;
  Displacement derivative(int direction, int order = 1) const;
  Displacement laplacian() const;
  Displacement bilaplacian() const;   ///< multiplier |k|^4
  Displacement triharmonic() const;   ///< multiplier |k|^6
  /// eta(y + h e_direction), exact in spectral space.
  Displacement shifted(double h, int direction) const;
  /// Heat-kernel smoothing, multiplier exp(-eps |k|^2).
  Displacement heat_smoothed(double eps) const;
  /// Truncates or zero-pads to a new band limit.
  Displacement resized(int band) const;

  double mean() const;
  /// Max |eta| over an oversampled grid.
  double sup_norm(int oversample = 4) const;
  double l2_norm_sq() const;
  /// sum (1 + |k|^2)^s |c_k|^2 |Gamma|
  double sobolev_norm_sq(double s) const;
  /// sum |k|^{2s} |c_k|^2 |Gamma|
  double seminorm_sq(double s) const;
  /// Largest violation of conjugate symmetry.
  double reality_defect() const;

  Displacement& operator+=(const Displacement& o);
  Displacement& operator-=(const Displacement& o);
  Displacement& operator*=(double s);

 private:
  int dim_ = 1;
  int band_ = 0;
  std::vector<cplx> coeffs_;
};

Displacement operator+(Displacement a, const Displacement& b);
Displacement operator-(Displacement a, const Displacement& b);
Displacement operator*(double s, Displacement a);
Displacement operator*(Displacement a, double s);

/// int_Gamma a b dy.
double inner_product(const Displacement& a, const Displacement& b);
/// int_Gamma (Laplace a)(Laplace b) + eps int grad^3 a : grad^3 b.
double elastic_pairing(const Displacement& a, const Displacement& b, double eps);
/// Pointwise product truncated to `band`, computed on a grid large enough that
/// nothing aliases into the retained modes (3/2 rule for equal bands).
Displacement product(const Displacement& a, const Displacement& b, int band);

}  // namespace fsilab
