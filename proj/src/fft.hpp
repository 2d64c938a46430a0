#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Core>
#include <unsupported/Eigen/FFT>

namespace kmf::detail {

// kissfft is fast only for lengths with small prime factors.
inline bool is_smooth(std::size_t n) {
  if (n == 0) return false;
  for (std::size_t p : {2u, 3u, 5u}) {
    while (n % p == 0) n /= p;
  }
  return n == 1;
}

/// Largest even 2/3/5-smooth length not above n (n >= 2).
inline std::size_t smooth_size_at_most(std::size_t n) {
  std::size_t m = n;
  while (m > 2 && (m % 2 != 0 || !is_smooth(m))) --m;
  return m;
}

/// Bins 0..n/2 of the unscaled DFT of a real sequence.
inline std::vector<std::complex<double>> real_fft(const double* data, std::size_t n) {
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<std::complex<double>> out(n / 2 + 1);
  fft.fwd(out.data(), data, static_cast<Eigen::Index>(n));
  return out;
}

/// Inverse of real_fft (including the 1/n factor).
inline Eigen::VectorXd inverse_real_fft(const std::vector<std::complex<double>>& half, std::size_t n) {
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  Eigen::VectorXd out(static_cast<Eigen::Index>(n));
  fft.inv(out.data(), half.data(), static_cast<Eigen::Index>(n));
  return out;
}

}  // namespace kmf::detail
