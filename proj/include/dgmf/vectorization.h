#pragma once

#include <cstddef>

namespace dgmf
{
  /**
   * Fixed-width array of numbers with element-wise arithmetic. One lane per
   * element of a batch, so that the sum-factorization kernels are vectorized
   * across elements. Written as plain loops; the compiler maps them to SIMD
   * instructions of the target.
   */
  template <typename Number, int W>
  struct VectorizedArray
  {
    static constexpr int width = W;
    using value_type = Number;

    alignas(W * sizeof(Number) >= 64 ? 64 : W * sizeof(Number)) Number data[W];

    VectorizedArray() = default;
    VectorizedArray(Number value) { *this = value; }

    VectorizedArray &operator=(Number value)
    {
      for (int v = 0; v < W; ++v)
        data[v] = value;
      return *this;
    }

    Number &operator[](int v) { return data[v]; }
    Number operator[](int v) const { return data[v]; }

#define DGMF_VA_OP(op)                                          \
  VectorizedArray &operator op##=(const VectorizedArray &other) \
  {                                                             \
    for (int v = 0; v < W; ++v)                                 \
      data[v] op## = other.data[v];                             \
    return *this;                                               \
  }                                                             \
  VectorizedArray &operator op##=(Number s)                     \
  {                                                             \
    for (int v = 0; v < W; ++v)                                 \
      data[v] op## = s;                                         \
    return *this;                                               \
  }
    DGMF_VA_OP(+)
    DGMF_VA_OP(-)
    DGMF_VA_OP(*)
    DGMF_VA_OP(/)
#undef DGMF_VA_OP

    VectorizedArray operator-() const
    {
      VectorizedArray r;
      for (int v = 0; v < W; ++v)
        r.data[v] = -data[v];
      return r;
    }
  };

#define DGMF_VA_BINARY(op)                                                           \
  template <typename Number, int W>                                                  \
  inline VectorizedArray<Number, W> operator op(VectorizedArray<Number, W> a,        \
                                                const VectorizedArray<Number, W> &b) \
  {                                                                                  \
    return a op## = b;                                                               \
  }                                                                                  \
  template <typename Number, int W>                                                  \
  inline VectorizedArray<Number, W> operator op(VectorizedArray<Number, W> a,        \
                                                Number b)                            \
  {                                                                                  \
    return a op## = b;                                                               \
  }                                                                                  \
  template <typename Number, int W>                                                  \
  inline VectorizedArray<Number, W> operator op(Number a,                            \
                                                const VectorizedArray<Number, W> &b) \
  {                                                                                  \
    VectorizedArray<Number, W> r(a);                                                 \
    return r op## = b;                                                               \
  }
  DGMF_VA_BINARY(+)
  DGMF_VA_BINARY(-)
  DGMF_VA_BINARY(*)
  DGMF_VA_BINARY(/)
#undef DGMF_VA_BINARY

  /// Lane count filling a 256-bit register: 4 doubles or 8 floats.
  template <typename Number>
  inline constexpr int default_width = static_cast<int>(32 / sizeof(Number));

  template <typename Number>
  using Batch = VectorizedArray<Number, default_width<Number>>;
} // namespace dgmf
