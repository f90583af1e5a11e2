#pragma once
// Mixed-radix complex FFT for sizes 2^a * 3^b * 5^c (the analysis size 320
// is 2^6 * 5; fast convolution uses powers of two). Plans are cached per
// size and safe to share across threads.

#include <complex>
#include <vector>

namespace paec {

using cd = std::complex<double>;

bool fft_size_supported(int n);
// Smallest supported size >= n.
int fft_good_size(int n);

// In-place transform; inverse includes the 1/n scale.
void fft(std::vector<cd>& x, bool inverse = false);

// Linear convolution of two real sequences (length a+b-1), FFT-backed.
std::vector<double> fft_convolve(const std::vector<double>& a,
                                 const std::vector<double>& b);

} // namespace paec
