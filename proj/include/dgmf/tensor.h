#pragma once

#include <dgmf/dense.h>
#include <dgmf/polybasis.h>

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

namespace dgmf
{
  enum class EvenOdd
  {
    automatic, // use the even-odd path when the matrix has the symmetry
    required,  // throw ParameterError when it does not
    disabled
  };

  /// Longest 1D line the kernels handle (n or n_q).
  inline constexpr unsigned max_line_length = 40;

  /**
   * A 1D matrix applied along one dimension of a tensor, i.e. the Kronecker
   * factor I x ... x A x ... x I. Matrices with the point symmetry
   * M(q,j) = s M(r-1-q, c-1-j), s = +1 or -1, are additionally stored in
   * even/odd split form which halves the multiplications.
   */
  template <typename Number>
  class Kernel1D
  {
  public:
    Kernel1D() = default;
    explicit Kernel1D(const DenseMatrix &matrix, EvenOdd mode = EvenOdd::automatic);

    unsigned rows() const { return n_rows; }
    unsigned cols() const { return n_cols; }
    bool uses_even_odd() const { return sign != 0; }
    /// +1 or -1 for symmetric matrices, 0 otherwise.
    int symmetry_sign() const { return sign; }

    /**
     * out = (I x .. x A x .. x I) in along @p dim (A^T if @p transpose).
     * @p extent holds the input extents of three dimensions (1 for unused
     * ones). @p in and @p out must not overlap.
     */
    template <typename T>
    void apply(const T *in,
               T *out,
               const std::array<unsigned, 3> &extent,
               unsigned dim,
               bool transpose,
               bool add = false) const;

  private:
    template <int R, int C, typename T>
    void apply_lines(const T *in,
                     T *out,
                     std::size_t stride,
                     std::size_t n_outer,
                     bool transpose,
                     bool add) const;

    struct Split
    {
      // rows (r+1)/2; even has c/2 + (c odd) columns, odd c/2 columns
      std::vector<Number> even, odd;
    };

    unsigned n_rows = 0, n_cols = 0;
    int sign = 0;
    std::vector<Number> m, mt;
    Split split[2];
  };

  /**
   * Everything the cell and face kernels need about a basis in a given
   * quadrature formula, in the working precision.
   */
  template <typename Number>
  struct ShapeKernels
  {
    ShapeKernels() = default;
    ShapeKernels(const BasisMatrices &bm, unsigned dim, EvenOdd mode = EvenOdd::automatic);

    unsigned dim = 3;
    unsigned n = 0;
    unsigned nq = 0;
    Kernel1D<Number> shape;
    Kernel1D<Number> derivative;
    bool shape_identity = false;
    std::vector<Number> face_value[2];
    std::vector<Number> face_derivative[2];
    /// Coefficient layers (index along the normal) with a nonzero entry in
    /// face_value or face_derivative, and in face_value only.
    std::vector<unsigned> layers[2];
    std::vector<unsigned> value_layers[2];
    /// Offsets of the tangential positions of a face with normal k inside an
    /// element, tangential dimensions in increasing order, the lower fastest.
    std::vector<unsigned> tangential_offset[3];

    std::size_t dofs_per_cell() const { return ipow(n, dim); }
    std::size_t points_per_cell() const { return ipow(nq, dim); }
    std::size_t points_per_face() const { return ipow(nq, dim - 1); }
    /// Scratch entries per buffer needed by the kernels below.
    std::size_t buffer_size() const { return ipow(std::max(n, nq), dim); }

    static std::size_t ipow(unsigned b, unsigned e)
    {
      std::size_t r = 1;
      for (unsigned i = 0; i < e; ++i)
        r *= b;
      return r;
    }
  };

  // ---------------------------------------------------------------------
  // cell kernels
  // ---------------------------------------------------------------------

  /// values = (S x S x S) u. @p tmp must hold buffer_size() entries.
  template <typename Number, typename T>
  void cell_interpolate(const ShapeKernels<Number> &sk, const T *u, T *values, T *tmp);

  /// grad[k] = D along dimension k of the quadrature-point values.
  template <typename Number, typename T>
  void cell_gradients_from_values(const ShapeKernels<Number> &sk, const T *values, T *const *grad);

  /// values += sum_k D_k^T grad[k].
  template <typename Number, typename T>
  void cell_add_gradient_transpose(const ShapeKernels<Number> &sk, T *const *grad, T *values);

  /// out (+)= (S^T x S^T x S^T) values. Overwrites @p values.
  template <typename Number, typename T>
  void cell_integrate(const ShapeKernels<Number> &sk, T *values, T *tmp, T *out, bool add);

  // ---------------------------------------------------------------------
  // face kernels; face = 2k + s for the face xi_k = s
  // ---------------------------------------------------------------------

  /**
   * Values and reference gradient at the face quadrature points. Only the
   * coefficient layers listed in sk.layers[s] (or value_layers[s]) are read.
   * @p tmp must hold 3 * points_per_face() entries (at least 3 n^{d-1}).
   */
  template <typename Number, typename T>
  void face_interpolate(const ShapeKernels<Number> &sk,
                        unsigned face,
                        const T *u,
                        T *value,
                        T *const *grad,
                        T *tmp,
                        bool values_only = false);

  /// Transpose of face_interpolate, accumulated into @p out. Overwrites
  /// @p value and @p grad.
  template <typename Number, typename T>
  void face_integrate(const ShapeKernels<Number> &sk,
                      unsigned face,
                      T *value,
                      T *const *grad,
                      T *tmp,
                      T *out,
                      bool values_only = false);

  // ---------------------------------------------------------------------
  // owning containers and convenience interface on doubles
  // ---------------------------------------------------------------------

  /**
   * Tensor data of one or several elements. Point index i (lexicographic,
   * dimension 0 fastest) of lane v sits at data[i * batch_width + v].
   */
  struct ElementField
  {
    unsigned dim = 3;
    std::array<unsigned, 3> extent = {1, 1, 1};
    unsigned batch_width = 1;
    std::vector<double> data;

    ElementField() = default;
    ElementField(unsigned dim, unsigned n, unsigned batch_width = 1);
    ElementField(unsigned dim, std::array<unsigned, 3> extent, unsigned batch_width = 1);

    std::size_t points() const { return std::size_t(extent[0]) * extent[1] * extent[2]; }
    double &operator()(std::size_t i, unsigned lane = 0) { return data[i * batch_width + lane]; }
    double operator()(std::size_t i, unsigned lane = 0) const { return data[i * batch_width + lane]; }
  };

  /// Values and reference gradient (dim components) on the face points.
  struct FaceField
  {
    std::vector<double> values;
    std::vector<std::vector<double>> gradient;
  };

  ElementField contract(const DenseMatrix &matrix,
                        const ElementField &field,
                        unsigned dim,
                        bool transpose = false);

  /// Same result as contract(), through the even-odd split. Throws
  /// ParameterError if the matrix lacks the point symmetry.
  ElementField contract_even_odd(const DenseMatrix &matrix,
                                 const ElementField &field,
                                 unsigned dim,
                                 bool transpose = false);

  /// Reference gradient of u at the d-dimensional tensor quadrature points.
  std::vector<ElementField> cell_gradients(const BasisMatrices &bm,
                                           const ElementField &u,
                                           unsigned dim);

  FaceField face_interpolate(const BasisMatrices &bm,
                             const ElementField &u,
                             unsigned face,
                             bool values_only = false);

  /// Accumulates the transpose of face_interpolate applied to @p w into @p u.
  void face_integrate(const BasisMatrices &bm,
                      const FaceField &w,
                      unsigned face,
                      ElementField &u,
                      bool values_only = false);

  /// Layers along the face normal that face_interpolate reads on side s.
  std::vector<unsigned> face_touched_layers(const BasisMatrices &bm,
                                            unsigned side,
                                            bool values_only = false);

  // ---------------------------------------------------------------------
  // implementation
  // ---------------------------------------------------------------------

  template <typename Number>
  Kernel1D<Number>::Kernel1D(const DenseMatrix &matrix, EvenOdd mode)
    : n_rows(static_cast<unsigned>(matrix.rows()))
    , n_cols(static_cast<unsigned>(matrix.cols()))
  {
    if (n_rows > max_line_length || n_cols > max_line_length)
      throw ParameterError("Kernel1D: matrix too large");
    m.resize(std::size_t(n_rows) * n_cols);
    mt.resize(m.size());
    for (unsigned q = 0; q < n_rows; ++q)
      for (unsigned j = 0; j < n_cols; ++j)
        {
          m[q * n_cols + j] = static_cast<Number>(matrix(q, j));
          mt[j * n_rows + q] = static_cast<Number>(matrix(q, j));
        }

    if (mode == EvenOdd::disabled)
      return;

    double scale = 0.;
    for (const double v : matrix.values())
      scale = std::max(scale, std::abs(v));
    const double tol = 1e-12 * std::max(scale, 1e-300);
    for (const int s : {1, -1})
      {
        bool ok = true;
        for (unsigned q = 0; q < n_rows && ok; ++q)
          for (unsigned j = 0; j < n_cols && ok; ++j)
            ok = std::abs(matrix(q, j) - s * matrix(n_rows - 1 - q, n_cols - 1 - j)) <= tol;
        if (ok)
          {
            sign = s;
            break;
          }
      }
    if (sign == 0)
      {
        if (mode == EvenOdd::required)
          throw ParameterError("Kernel1D: matrix lacks the even-odd symmetry");
        return;
      }

    for (int t = 0; t < 2; ++t)
      {
        const unsigned r = t ? n_cols : n_rows;
        const unsigned c = t ? n_rows : n_cols;
        auto a = [&](unsigned q, unsigned j) { return t ? matrix(j, q) : matrix(q, j); };
        const unsigned hr = (r + 1) / 2, hc = c / 2, ce = hc + (c % 2);
        split[t].even.assign(std::size_t(hr) * ce, Number(0));
        split[t].odd.assign(std::size_t(hr) * hc, Number(0));
        for (unsigned q = 0; q < hr; ++q)
          {
            for (unsigned j = 0; j < hc; ++j)
              {
                split[t].even[q * ce + j] = static_cast<Number>(0.5 * (a(q, j) + a(q, c - 1 - j)));
                split[t].odd[q * hc + j] = static_cast<Number>(0.5 * (a(q, j) - a(q, c - 1 - j)));
              }
            if (c % 2)
              split[t].even[q * ce + hc] = static_cast<Number>(a(q, hc));
          }
      }
  }

  template <typename Number>
  template <int R, int C, typename T>
  void Kernel1D<Number>::apply_lines(const T *in,
                                     T *out,
                                     std::size_t stride,
                                     std::size_t n_outer,
                                     bool transpose,
                                     bool add) const
  {
    const unsigned r = R ? R : (transpose ? n_cols : n_rows);
    const unsigned c = C ? C : (transpose ? n_rows : n_cols);
    const Number *a = transpose ? mt.data() : m.data();
    const Split &sp = split[transpose ? 1 : 0];
    const unsigned hr = (r + 1) / 2, hc = c / 2, ce = hc + (c % 2);
    const bool eo = sign != 0;

    T x[max_line_length], y[max_line_length];
    for (std::size_t outer = 0; outer < n_outer; ++outer)
      for (std::size_t inner = 0; inner < stride; ++inner)
        {
          const T *xin = in + outer * stride * c + inner;
          T *yout = out + outer * stride * r + inner;
          if (eo)
            {
              T xp[max_line_length / 2 + 1], xm[max_line_length / 2];
              for (unsigned j = 0; j < hc; ++j)
                {
                  const T x0 = xin[j * stride];
                  const T x1 = xin[(c - 1 - j) * stride];
                  xp[j] = x0 + x1;
                  xm[j] = x0 - x1;
                }
              if (c % 2)
                xp[hc] = xin[hc * stride];
              for (unsigned q = 0; q < hr; ++q)
                {
                  const Number *e = sp.even.data() + q * ce;
                  const Number *o = sp.odd.data() + q * hc;
                  T ev = e[0] * xp[0];
                  for (unsigned j = 1; j < ce; ++j)
                    ev += e[j] * xp[j];
                  T od = T(Number(0));
                  for (unsigned j = 0; j < hc; ++j)
                    od += o[j] * xm[j];
                  y[q] = ev + od;
                  if (r - 1 - q != q)
                    y[r - 1 - q] = sign > 0 ? ev - od : od - ev;
                }
            }
          else
            {
              for (unsigned j = 0; j < c; ++j)
                x[j] = xin[j * stride];
              for (unsigned q = 0; q < r; ++q)
                {
                  const Number *row = a + q * c;
                  T sum = row[0] * x[0];
                  for (unsigned j = 1; j < c; ++j)
                    sum += row[j] * x[j];
                  y[q] = sum;
                }
            }
          if (add)
            for (unsigned q = 0; q < r; ++q)
              yout[q * stride] += y[q];
          else
            for (unsigned q = 0; q < r; ++q)
              yout[q * stride] = y[q];
        }
  }

  template <typename Number>
  template <typename T>
  void Kernel1D<Number>::apply(const T *in,
                               T *out,
                               const std::array<unsigned, 3> &extent,
                               unsigned dim,
                               bool transpose,
                               bool add) const
  {
    const unsigned c = transpose ? n_rows : n_cols;
    if (dim > 2 || extent[dim] != c)
      throw ParameterError("Kernel1D::apply: extent does not match the matrix");
    std::size_t stride = 1, n_outer = 1;
    for (unsigned d = 0; d < dim; ++d)
      stride *= extent[d];
    for (unsigned d = dim + 1; d < 3; ++d)
      n_outer *= extent[d];

    if (n_rows == n_cols)
      switch (n_rows)
        {
#define DGMF_CASE(N) \
  case N:            \
    return apply_lines<N, N>(in, out, stride, n_outer, transpose, add);
          DGMF_CASE(2)
          DGMF_CASE(3)
          DGMF_CASE(4)
          DGMF_CASE(5)
          DGMF_CASE(6)
          DGMF_CASE(7)
          DGMF_CASE(8)
          DGMF_CASE(9)
          DGMF_CASE(10)
          DGMF_CASE(11)
          DGMF_CASE(12)
#undef DGMF_CASE
          default:
            break;
        }
    apply_lines<0, 0>(in, out, stride, n_outer, transpose, add);
  }

  template <typename Number>
  ShapeKernels<Number>::ShapeKernels(const BasisMatrices &bm, unsigned dim_, EvenOdd mode)
    : dim(dim_)
    , n(static_cast<unsigned>(bm.n_dofs_1d()))
    , nq(static_cast<unsigned>(bm.n_q_1d()))
    , shape(bm.shape, mode)
    , derivative(bm.derivative, mode)
  {
    if (dim < 1 || dim > 3)
      throw ParameterError("ShapeKernels: dimension must be 1, 2 or 3");
    shape_identity = n == nq;
    for (unsigned q = 0; q < nq && shape_identity; ++q)
      for (unsigned j = 0; j < n && shape_identity; ++j)
        shape_identity = std::abs(bm.shape(q, j) - (q == j ? 1. : 0.)) < 1e-13;

    for (unsigned s = 0; s < 2; ++s)
      {
        for (unsigned j = 0; j < n; ++j)
          {
            face_value[s].push_back(static_cast<Number>(bm.face_value[s][j]));
            face_derivative[s].push_back(static_cast<Number>(bm.face_derivative[s][j]));
            if (bm.face_value[s][j] != 0. || bm.face_derivative[s][j] != 0.)
              layers[s].push_back(j);
            if (bm.face_value[s][j] != 0.)
              value_layers[s].push_back(j);
          }
      }

    for (unsigned k = 0; k < dim; ++k)
      {
        unsigned tdims[2] = {0, 0};
        unsigned nt = 0;
        for (unsigned d = 0; d < dim; ++d)
          if (d != k)
            tdims[nt++] = d;
        const std::size_t count = ipow(n, dim - 1);
        tangential_offset[k].resize(count);
        for (std::size_t t = 0; t < count; ++t)
          {
            std::size_t rest = t, offset = 0;
            for (unsigned i = 0; i < nt; ++i)
              {
                offset += (rest % n) * ipow(n, tdims[i]);
                rest /= n;
              }
            tangential_offset[k][t] = static_cast<unsigned>(offset);
          }
      }
  }

  template <typename Number, typename T>
  void cell_interpolate(const ShapeKernels<Number> &sk, const T *u, T *values, T *tmp)
  {
    const std::size_t np = sk.points_per_cell();
    if (sk.shape_identity)
      {
        for (std::size_t i = 0; i < np; ++i)
          values[i] = u[i];
        return;
      }
    std::array<unsigned, 3> ext = {1, 1, 1};
    for (unsigned d = 0; d < sk.dim; ++d)
      ext[d] = sk.n;
    // alternate buffers so that the last contraction lands in values
    const T *src = u;
    T *dst = (sk.dim % 2) ? values : tmp;
    for (unsigned d = 0; d < sk.dim; ++d)
      {
        sk.shape.apply(src, dst, ext, d, false);
        ext[d] = sk.nq;
        src = dst;
        dst = (dst == values) ? tmp : values;
      }
  }

  template <typename Number, typename T>
  void cell_gradients_from_values(const ShapeKernels<Number> &sk, const T *values, T *const *grad)
  {
    std::array<unsigned, 3> ext = {1, 1, 1};
    for (unsigned d = 0; d < sk.dim; ++d)
      ext[d] = sk.nq;
    for (unsigned d = 0; d < sk.dim; ++d)
      sk.derivative.apply(values, grad[d], ext, d, false);
  }

  template <typename Number, typename T>
  void cell_add_gradient_transpose(const ShapeKernels<Number> &sk, T *const *grad, T *values)
  {
    std::array<unsigned, 3> ext = {1, 1, 1};
    for (unsigned d = 0; d < sk.dim; ++d)
      ext[d] = sk.nq;
    for (unsigned d = 0; d < sk.dim; ++d)
      sk.derivative.apply(grad[d], values, ext, d, true, true);
  }

  template <typename Number, typename T>
  void cell_integrate(const ShapeKernels<Number> &sk, T *values, T *tmp, T *out, bool add)
  {
    if (sk.shape_identity)
      {
        const std::size_t np = sk.points_per_cell();
        if (add)
          for (std::size_t i = 0; i < np; ++i)
            out[i] += values[i];
        else
          for (std::size_t i = 0; i < np; ++i)
            out[i] = values[i];
        return;
      }
    std::array<unsigned, 3> ext = {1, 1, 1};
    for (unsigned d = 0; d < sk.dim; ++d)
      ext[d] = sk.nq;
    T *src = values;
    for (unsigned d = sk.dim; d-- > 0;)
      {
        T *dst = d == 0 ? out : (src == values ? tmp : values);
        sk.shape.apply(src, dst, ext, d, true, d == 0 && add);
        ext[d] = sk.n;
        src = dst;
      }
  }

  template <typename Number, typename T>
  void face_interpolate(const ShapeKernels<Number> &sk,
                        unsigned face,
                        const T *u,
                        T *value,
                        T *const *grad,
                        T *tmp,
                        bool values_only)
  {
    const unsigned k = face / 2, s = face % 2;
    const unsigned td = sk.dim - 1;
    const std::size_t nt = ShapeKernels<Number>::ipow(sk.n, td);
    const std::size_t stride = ShapeKernels<Number>::ipow(sk.n, k);
    const unsigned *off = sk.tangential_offset[k].data();
    const std::vector<unsigned> &layers = values_only ? sk.value_layers[s] : sk.layers[s];
    const Number *sf = sk.face_value[s].data();
    const Number *df = sk.face_derivative[s].data();

    T *v1 = sk.shape_identity ? value : tmp;
    T *d1 = values_only ? nullptr : (sk.shape_identity ? grad[k] : tmp + nt);
    for (std::size_t t = 0; t < nt; ++t)
      {
        v1[t] = T(Number(0));
        if (!values_only)
          d1[t] = T(Number(0));
      }
    for (const unsigned j : layers)
      {
        const T *layer = u + j * stride;
        const Number a = sf[j], b = df[j];
        if (values_only)
          for (std::size_t t = 0; t < nt; ++t)
            v1[t] += a * layer[off[t]];
        else
          for (std::size_t t = 0; t < nt; ++t)
            {
              const T x = layer[off[t]];
              v1[t] += a * x;
              d1[t] += b * x;
            }
      }

    if (!sk.shape_identity)
      {
        T *work = tmp + 2 * nt;
        auto interpolate = [&](T *src, T *dst) {
          std::array<unsigned, 3> ext = {1, 1, 1};
          for (unsigned d = 0; d < td; ++d)
            ext[d] = sk.n;
          if (td == 0)
            {
              dst[0] = src[0];
              return;
            }
          if (td == 1)
            {
              sk.shape.apply(src, dst, ext, 0, false);
              return;
            }
          sk.shape.apply(src, work, ext, 0, false);
          ext[0] = sk.nq;
          sk.shape.apply(work, dst, ext, 1, false);
        };
        interpolate(v1, value);
        if (!values_only)
          interpolate(d1, grad[k]);
      }

    if (!values_only)
      {
        std::array<unsigned, 3> ext = {1, 1, 1};
        for (unsigned d = 0; d < td; ++d)
          ext[d] = sk.nq;
        unsigned i = 0;
        for (unsigned d = 0; d < sk.dim; ++d)
          if (d != k)
            sk.derivative.apply(value, grad[d], ext, i++, false);
      }
  }

  template <typename Number, typename T>
  void face_integrate(const ShapeKernels<Number> &sk,
                      unsigned face,
                      T *value,
                      T *const *grad,
                      T *tmp,
                      T *out,
                      bool values_only)
  {
    const unsigned k = face / 2, s = face % 2;
    const unsigned td = sk.dim - 1;
    const std::size_t nt = ShapeKernels<Number>::ipow(sk.n, td);
    const std::size_t stride = ShapeKernels<Number>::ipow(sk.n, k);
    const unsigned *off = sk.tangential_offset[k].data();
    const std::vector<unsigned> &layers = values_only ? sk.value_layers[s] : sk.layers[s];
    const Number *sf = sk.face_value[s].data();
    const Number *df = sk.face_derivative[s].data();

    if (!values_only)
      {
        std::array<unsigned, 3> ext = {1, 1, 1};
        for (unsigned d = 0; d < td; ++d)
          ext[d] = sk.nq;
        unsigned i = 0;
        for (unsigned d = 0; d < sk.dim; ++d)
          if (d != k)
            sk.derivative.apply(grad[d], value, ext, i++, true, true);
      }

    T *v1 = value;
    T *d1 = values_only ? nullptr : grad[k];
    if (!sk.shape_identity)
      {
        T *work = tmp + 2 * nt;
        auto integrate = [&](T *src, T *dst) {
          std::array<unsigned, 3> ext = {1, 1, 1};
          for (unsigned d = 0; d < td; ++d)
            ext[d] = sk.nq;
          if (td == 0)
            {
              dst[0] = src[0];
              return;
            }
          if (td == 1)
            {
              sk.shape.apply(src, dst, ext, 0, true);
              return;
            }
          sk.shape.apply(src, work, ext, 1, true);
          ext[1] = sk.n;
          sk.shape.apply(work, dst, ext, 0, true);
        };
        integrate(value, tmp);
        v1 = tmp;
        if (!values_only)
          {
            integrate(grad[k], tmp + nt);
            d1 = tmp + nt;
          }
      }

    for (const unsigned j : layers)
      {
        T *layer = out + j * stride;
        const Number a = sf[j], b = df[j];
        if (values_only)
          for (std::size_t t = 0; t < nt; ++t)
            layer[off[t]] += a * v1[t];
        else
          for (std::size_t t = 0; t < nt; ++t)
            layer[off[t]] += a * v1[t] + b * d1[t];
      }
  }
} // namespace dgmf
