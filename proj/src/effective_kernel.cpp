#include "isometry/effective_kernel.hpp"

#include <algorithm>
#include <string>

#include "isometry/errors.hpp"

namespace isometry {

namespace {

// Floor division for possibly-negative numerators (C++ / truncates toward 0).
long long floor_div(long long a, long long b) {
  long long q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

int conv_out_extent(int in, int pad, int k, int stride) {
  return static_cast<int>(floor_div(in + 2ll * pad - k, stride)) + 1;
}

void validate(const ConvGeometry& g) {
  auto fail = [](const std::string& msg) {
    throw InputError("ConvGeometry: " + msg);
  };
  if (g.k_h < 1 || g.k_w < 1) fail("kernel extents must be >= 1");
  if (g.s_h < 1 || g.s_w < 1) fail("strides must be >= 1");
  if (g.p_h < 0 || g.p_w < 0) fail("padding must be >= 0");
  if (g.h_in < 1 || g.w_in < 1) fail("input extents must be >= 1");
  // Keeps the tap-count accounting inside exact 64-bit integer range.
  if (g.k_h > 4096 || g.k_w > 4096 || g.h_in > (1 << 16) || g.w_in > (1 << 16))
    fail("extents beyond supported range");
  // Padding at least as wide as the kernel would create output positions that
  // see no real input at all; the averaged-tap model (and any sane conv) stops
  // making sense there.
  if (g.p_h >= g.k_h || g.p_w >= g.k_w)
    fail("padding must be smaller than the kernel extent");
  if (conv_out_extent(g.h_in, g.p_h, g.k_h, g.s_h) < 1 ||
      conv_out_extent(g.w_in, g.p_w, g.k_w, g.s_w) < 1)
    fail("output extent would be < 1 (kernel larger than padded input)");
}

double brute_force_kernel_oracle(const ConvGeometry& g) {
  validate(g);
  if (static_cast<long long>(g.h_in) * g.w_in > 10000)
    throw InputError(
        "brute_force_kernel_oracle: input larger than 10^4 pixels; use "
        "effective_kernel_size");

  const int h_out = conv_out_extent(g.h_in, g.p_h, g.k_h, g.s_h);
  const int w_out = conv_out_extent(g.w_in, g.p_w, g.k_w, g.s_w);

  // Valid-tap counts factorize over axes: a tap (dy, dx) of output (oy, ox)
  // reads input (oy*s_h - p_h + dy, ox*s_w - p_w + dx), so the count is
  // rows_valid(oy) * cols_valid(ox).
  auto axis_counts = [](int out, int stride, int pad, int k, int in) {
    long long total = 0;
    for (int o = 0; o < out; ++o) {
      int lo = o * stride - pad;
      int cnt = 0;
      for (int d = 0; d < k; ++d) {
        int pos = lo + d;
        if (pos >= 0 && pos < in) ++cnt;
      }
      total += cnt;
    }
    return total;
  };

  const long long rows = axis_counts(h_out, g.s_h, g.p_h, g.k_h, g.h_in);
  const long long cols = axis_counts(w_out, g.s_w, g.p_w, g.k_w, g.w_in);
  return static_cast<double>(rows) * static_cast<double>(cols) /
         (static_cast<double>(h_out) * static_cast<double>(w_out));
}

double effective_kernel_size(const ConvGeometry& g) {
  validate(g);

  const long long h_out = conv_out_extent(g.h_in, g.p_h, g.k_h, g.s_h);
  const long long w_out = conv_out_extent(g.w_in, g.p_w, g.k_w, g.s_w);

  // Boundary accounting per axis: output o loses clamp(p - o*s) taps against
  // the leading edge, and clamp(s*(o') + k - in - p) against the trailing edge
  // where o' counts from the last fully-interior position. Different output
  // positions can overhang only one edge each when pad < kernel, so the cut
  // sums are disjoint. All counts clamped to the output grid and [0, k]: the
  // raw iteration bounds floor(p/s)+1 and out - out_half_padded can exceed the
  // grid for degenerate shapes.
  auto axis_cut = [](long long out, long long stride, long long pad,
                     long long k, long long in) {
    auto clamp_k = [k](long long v) { return std::clamp(v, 0ll, k); };
    long long cut = 0;
    const long long upper_rounds = std::min(out, floor_div(pad, stride) + 1);
    for (long long i = 0; i < upper_rounds; ++i) cut += clamp_k(pad - i * stride);
    // Number of positions whose window stays inside the one-side-padded input.
    const long long out_hp = floor_div(in + pad - k, stride) + 1;
    for (long long i = std::max(0ll, out_hp); i < out; ++i)
      cut += clamp_k(stride * i + k - in - pad);
    return cut;
  };

  const long long row_cut = axis_cut(h_out, g.s_h, g.p_h, g.k_h, g.h_in);
  const long long col_cut = axis_cut(w_out, g.s_w, g.p_w, g.k_w, g.w_in);

  const long long kk = static_cast<long long>(g.k_h) * g.k_w;
  const long long taps = kk * h_out * w_out;                       // T
  const long long perimeter = row_cut * g.k_w * w_out + col_cut * g.k_h * h_out;  // P
  const long long corners = row_cut * col_cut;                     // R
  return static_cast<double>(taps - perimeter + corners) /
         static_cast<double>(taps) * static_cast<double>(kk);
}

}  // namespace isometry
