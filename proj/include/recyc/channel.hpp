#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "recyc/error.hpp"

namespace recyc {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Random stream for one Monte Carlo sample. Keyed by (seed, index, domain) so
/// every sample draws the same numbers no matter which worker evaluates it.
class SampleStream {
 public:
  SampleStream(std::uint64_t seed, std::uint64_t index, std::uint32_t domain = 0)
      : engine_(mix(mix(mix(seed) ^ index) ^ domain)) {}

  double normal(double stddev) { return std::normal_distribution<double>(0.0, stddev)(engine_); }

  std::mt19937_64& engine() { return engine_; }

 private:
  // splitmix64 finalizer; decorrelates neighbouring (seed, index) keys.
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::mt19937_64 engine_;
};

/// One flat-fading realization: complex gains G_k and power gains H_k = |G_k|^2.
template <typename Scalar = double>
struct ChannelSample {
  VectorX<std::complex<Scalar>> gains;
  VectorX<Scalar> powers;

  Eigen::Index size() const { return powers.size(); }

  static ChannelSample from_gains(VectorX<std::complex<Scalar>> g) {
    require(g.size() >= 1, ErrorKind::InvalidParameter, "ChannelSample: need at least one antenna");
    ChannelSample s;
    s.powers = g.cwiseAbs2();
    s.gains = std::move(g);
    return s;
  }

  /// Real nonnegative gains sqrt(h_k); enough for schedulers, which only see powers.
  static ChannelSample from_powers(const VectorX<Scalar>& h) {
    require(h.size() >= 1, ErrorKind::InvalidParameter, "ChannelSample: need at least one antenna");
    require((h.array() >= Scalar(0)).all(), ErrorKind::InvalidParameter,
            "ChannelSample: power gains must be nonnegative");
    ChannelSample s;
    s.gains = h.cwiseSqrt().template cast<std::complex<Scalar>>();
    s.powers = h;
    return s;
  }
};

/// Circularly-symmetric complex Gaussian gains with E[|G_k|^2] = mean_gain.
inline ChannelSample<double> draw_channel(SampleStream& stream, int m, double mean_gain) {
  require(m >= 1, ErrorKind::InvalidParameter, "draw_channel: m must be >= 1");
  require(mean_gain > 0.0, ErrorKind::InvalidParameter, "draw_channel: mean_gain must be > 0");
  const double sigma = std::sqrt(mean_gain / 2.0);
  VectorX<std::complex<double>> g(m);
  for (int k = 0; k < m; ++k) {
    const double re = stream.normal(sigma);
    const double im = stream.normal(sigma);
    g(k) = {re, im};
  }
  return ChannelSample<double>::from_gains(std::move(g));
}

/// Inter-antenna power coupling alpha(k, l) at the transmitter.
template <typename Scalar = double>
class CouplingMatrix {
 public:
  static CouplingMatrix symmetric(int m, Scalar alpha) {
    require(m >= 1, ErrorKind::InvalidParameter, "CouplingMatrix: m must be >= 1");
    require(alpha >= Scalar(0) && alpha < Scalar(1), ErrorKind::InvalidParameter,
            "CouplingMatrix: alpha must lie in [0, 1)");
    CouplingMatrix c;
    c.alpha_ = MatrixX<Scalar>::Constant(m, m, alpha);
    c.alpha_.diagonal().setZero();
    c.symmetric_ = alpha;
    return c;
  }

  static CouplingMatrix zeros(int m) { return symmetric(m, Scalar(0)); }

  /// Validates the invariants and detects the constant off-diagonal case.
  static CouplingMatrix from_matrix(MatrixX<Scalar> alpha) {
    require(alpha.rows() >= 1 && alpha.rows() == alpha.cols(), ErrorKind::InvalidParameter,
            "CouplingMatrix: matrix must be square and nonempty");
    const auto m = alpha.rows();
    std::optional<Scalar> common;
    bool constant = true;
    for (Eigen::Index k = 0; k < m; ++k) {
      require(alpha(k, k) == Scalar(0), ErrorKind::InvalidParameter,
              "CouplingMatrix: diagonal entries must be zero");
      for (Eigen::Index l = 0; l < m; ++l) {
        if (k == l) continue;
        const Scalar a = alpha(k, l);
        require(a >= Scalar(0) && a < Scalar(1), ErrorKind::InvalidParameter,
                "CouplingMatrix: entries must lie in [0, 1)");
        if (!common) common = a;
        constant = constant && a == *common;
      }
    }
    CouplingMatrix c;
    c.alpha_ = std::move(alpha);
    if (constant) c.symmetric_ = common.value_or(Scalar(0));
    return c;
  }

  Eigen::Index size() const { return alpha_.rows(); }
  const MatrixX<Scalar>& alpha() const { return alpha_; }
  Scalar operator()(Eigen::Index k, Eigen::Index l) const { return alpha_(k, l); }

  /// Set when every off-diagonal entry is identical (including M = 1).
  std::optional<Scalar> symmetric_scalar() const { return symmetric_; }

  /// Leading m x m block; used when sweeping the antenna count over a fixed table.
  CouplingMatrix leading(int m) const {
    require(m >= 1 && m <= size(), ErrorKind::InvalidParameter,
            "CouplingMatrix: leading block larger than matrix");
    return from_matrix(alpha_.topLeftCorner(m, m));
  }

 private:
  CouplingMatrix() = default;

  MatrixX<Scalar> alpha_;
  std::optional<Scalar> symmetric_;
};

/// Antenna positions in units of the carrier wavelength.
struct AntennaLayout {
  std::vector<Eigen::Vector2d> positions;

  int size() const { return static_cast<int>(positions.size()); }
  double min_distance() const;
};

/// Centers and corners of a hexagonal tiling with cell side `side`, which is the
/// triangular lattice of pitch `side`. Rings are filled outward from the origin,
/// counter-clockwise from the +x axis within a ring.
AntennaLayout hex_layout(int n, double side);

AntennaLayout ula_layout(int n, double spacing);

/// Power-law decay alpha_ref * (d_ref / d)^exponent, clamped below 1.
CouplingMatrix<double> coupling_from_layout(const AntennaLayout& layout, double alpha_ref,
                                            double d_ref, double exponent);

inline constexpr double kCouplingCap = 1.0 - 1e-9;

}  // namespace recyc
