#include <dgmf/tensor.h>

namespace dgmf
{
  ElementField::ElementField(unsigned dim_, unsigned n, unsigned width)
    : ElementField(dim_, {n, dim_ > 1 ? n : 1u, dim_ > 2 ? n : 1u}, width)
  {}

  ElementField::ElementField(unsigned dim_, std::array<unsigned, 3> extent_, unsigned width)
    : dim(dim_)
    , extent(extent_)
    , batch_width(width)
  {
    if (dim < 1 || dim > 3 || width == 0)
      throw ParameterError("ElementField: invalid dimension or batch width");
    for (unsigned d = dim; d < 3; ++d)
      if (extent[d] != 1)
        throw ParameterError("ElementField: extents beyond dim must be 1");
    data.assign(points() * batch_width, 0.);
  }

  namespace
  {
    std::vector<double> lane_of(const ElementField &f, unsigned lane)
    {
      std::vector<double> x(f.points());
      for (std::size_t i = 0; i < x.size(); ++i)
        x[i] = f(i, lane);
      return x;
    }

    ElementField contract_impl(const DenseMatrix &matrix,
                               const ElementField &field,
                               unsigned dim,
                               bool transpose,
                               EvenOdd mode)
    {
      if (dim >= field.dim)
        throw ParameterError("contract: dimension out of range");
      const Kernel1D<double> kernel(matrix, mode);
      const unsigned c = static_cast<unsigned>(transpose ? matrix.rows() : matrix.cols());
      const unsigned r = static_cast<unsigned>(transpose ? matrix.cols() : matrix.rows());
      if (field.extent[dim] != c)
        throw ParameterError("contract: field extent does not match the matrix");
      std::array<unsigned, 3> out_extent = field.extent;
      out_extent[dim] = r;
      ElementField result(field.dim, out_extent, field.batch_width);
      std::vector<double> y(result.points());
      for (unsigned v = 0; v < field.batch_width; ++v)
        {
          const std::vector<double> x = lane_of(field, v);
          kernel.apply(x.data(), y.data(), field.extent, dim, transpose);
          for (std::size_t i = 0; i < y.size(); ++i)
            result(i, v) = y[i];
        }
      return result;
    }

    void check_element(const BasisMatrices &bm, const ElementField &u)
    {
      for (unsigned d = 0; d < u.dim; ++d)
        if (u.extent[d] != bm.n_dofs_1d())
          throw ParameterError("field extent does not match the basis size");
    }
  } // namespace

  ElementField contract(const DenseMatrix &matrix,
                        const ElementField &field,
                        unsigned dim,
                        bool transpose)
  {
    return contract_impl(matrix, field, dim, transpose, EvenOdd::disabled);
  }

  ElementField contract_even_odd(const DenseMatrix &matrix,
                                 const ElementField &field,
                                 unsigned dim,
                                 bool transpose)
  {
    return contract_impl(matrix, field, dim, transpose, EvenOdd::required);
  }

  std::vector<ElementField> cell_gradients(const BasisMatrices &bm,
                                           const ElementField &u,
                                           unsigned dim)
  {
    if (u.dim != dim)
      throw ParameterError("cell_gradients: dimension mismatch");
    check_element(bm, u);
    const ShapeKernels<double> sk(bm, dim);
    std::vector<double> values(sk.buffer_size()), tmp(sk.buffer_size());
    std::vector<std::vector<double>> g(dim, std::vector<double>(sk.points_per_cell()));
    double *gp[3] = {g[0].data(), dim > 1 ? g[1].data() : nullptr, dim > 2 ? g[2].data() : nullptr};

    std::vector<ElementField> result(dim, ElementField(dim, sk.nq, u.batch_width));
    for (unsigned v = 0; v < u.batch_width; ++v)
      {
        const std::vector<double> x = lane_of(u, v);
        cell_interpolate(sk, x.data(), values.data(), tmp.data());
        cell_gradients_from_values(sk, values.data(), gp);
        for (unsigned d = 0; d < dim; ++d)
          for (std::size_t i = 0; i < sk.points_per_cell(); ++i)
            result[d](i, v) = g[d][i];
      }
    return result;
  }

  FaceField face_interpolate(const BasisMatrices &bm,
                             const ElementField &u,
                             unsigned face,
                             bool values_only)
  {
    check_element(bm, u);
    if (u.batch_width != 1)
      throw ParameterError("face_interpolate: expects a single element");
    if (face >= 2 * u.dim)
      throw ParameterError("face_interpolate: face index out of range");
    const ShapeKernels<double> sk(bm, u.dim);
    FaceField f;
    f.values.assign(sk.points_per_face(), 0.);
    f.gradient.assign(u.dim, std::vector<double>(sk.points_per_face(), 0.));
    double *gp[3] = {nullptr, nullptr, nullptr};
    for (unsigned d = 0; d < u.dim; ++d)
      gp[d] = f.gradient[d].data();
    std::vector<double> tmp(3 * sk.buffer_size());
    face_interpolate(sk, face, u.data.data(), f.values.data(), gp, tmp.data(), values_only);
    if (values_only)
      f.gradient.clear();
    return f;
  }

  void face_integrate(const BasisMatrices &bm,
                      const FaceField &w,
                      unsigned face,
                      ElementField &u,
                      bool values_only)
  {
    check_element(bm, u);
    if (u.batch_width != 1)
      throw ParameterError("face_integrate: expects a single element");
    if (face >= 2 * u.dim)
      throw ParameterError("face_integrate: face index out of range");
    const ShapeKernels<double> sk(bm, u.dim);
    if (w.values.size() != sk.points_per_face() ||
        (!values_only && w.gradient.size() != u.dim))
      throw ParameterError("face_integrate: face field has the wrong size");
    std::vector<double> value = w.values;
    std::vector<std::vector<double>> grad;
    double *gp[3] = {nullptr, nullptr, nullptr};
    if (!values_only)
      {
        grad = w.gradient;
        for (unsigned d = 0; d < u.dim; ++d)
          {
            if (grad[d].size() != sk.points_per_face())
              throw ParameterError("face_integrate: face field has the wrong size");
            gp[d] = grad[d].data();
          }
      }
    std::vector<double> tmp(3 * sk.buffer_size());
    face_integrate(sk, face, value.data(), gp, tmp.data(), u.data.data(), values_only);
  }

  std::vector<unsigned> face_touched_layers(const BasisMatrices &bm, unsigned side, bool values_only)
  {
    const ShapeKernels<double> sk(bm, 1);
    return values_only ? sk.value_layers[side] : sk.layers[side];
  }
} // namespace dgmf
