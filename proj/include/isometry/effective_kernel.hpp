#pragma once

namespace isometry {

// Geometry of one 2D convolution: kernel extents, strides, symmetric
// zero-padding per side, and the spatial input size.
struct ConvGeometry {
  int k_h = 1, k_w = 1;
  int s_h = 1, s_w = 1;
  int p_h = 0, p_w = 0;
  int h_in = 1, w_in = 1;
};

// floor((in + 2*pad - k) / stride) + 1
int conv_out_extent(int in, int pad, int k, int stride);

// Throws InputError unless: extents/strides/input >= 1, pads >= 0,
// pad < kernel extent on both axes, and both output extents are >= 1.
void validate(const ConvGeometry& g);

// Average number of kernel taps that land on real (unpadded) input, averaged
// over all output positions. Padding makes boundary outputs see fewer taps, so
// the value is <= k_h*k_w, with equality iff there is no padding. Closed-form
// accounting over the cut rows/columns of the boundary output positions;
// exact (it equals the enumeration oracle when pad < kernel).
double effective_kernel_size(const ConvGeometry& g);

// Ground truth by direct enumeration: for every output position, count the
// kernel taps whose input coordinate is inside the real input, then average.
// Refuses inputs with h_in * w_in > 10^4.
double brute_force_kernel_oracle(const ConvGeometry& g);

}  // namespace isometry
