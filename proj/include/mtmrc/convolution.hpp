#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "mtmrc/matrix_seq.hpp"

namespace mtmrc {

enum class ConvolveMethod { direct, fft, automatic };

// Both operands must share s. The result lives on the componentwise-min
// grid of the inputs: beyond it the product would need terms the truncated
// inputs do not carry. Matrix order is A(l) * B(k - l).
MatrixSeq convolve_direct(const MatrixSeq& a, const MatrixSeq& b);
MatrixSeq convolve_fft(const MatrixSeq& a, const MatrixSeq& b);
MatrixSeq convolve(const MatrixSeq& a, const MatrixSeq& b, ConvolveMethod method = ConvolveMethod::automatic);

// Padded point count above which ConvolveMethod::automatic picks the FFT.
std::size_t fft_dispatch_threshold() noexcept;
void set_fft_dispatch_threshold(std::size_t points) noexcept;
// True when convolve(..., automatic) would take the FFT path on this grid.
bool prefers_fft(const Grid& result_grid) noexcept;

// n-fold power A^(n), with A^(0) the identity, by square-and-multiply.
MatrixSeq nfold(const MatrixSeq& a, long long n, ConvolveMethod method = ConvolveMethod::automatic);

struct ComplexMatrixSeq {
  Grid grid;
  std::size_t s;
  std::vector<std::complex<double>> data;  // same layout as MatrixSeq

  std::complex<double> operator()(std::size_t point, std::size_t i, std::size_t j) const {
    return data[point * s * s + i * s + j];
  }
};

// Entrywise multidimensional DFT, exponent sign -1, after zero-padding A to
// `padded`. The period along axis a is padded.bound(a) + 1.
ComplexMatrixSeq dft(const MatrixSeq& a, const Grid& padded);
// Normalized inverse of dft. Imaginary residue above 1e-9 (relative to the
// largest magnitude, floor 1) raises NumericalError.
MatrixSeq idft(const ComplexMatrixSeq& a);

}  // namespace mtmrc
