#pragma once

#include <dgmf/dense.h>

#include <array>
#include <cstdint>
#include <vector>

namespace dgmf
{
  using Levels = std::array<unsigned, 3>;

  /// Lower and upper bound per coordinate direction.
  using Box = std::array<std::array<double, 2>, 3>;

  /**
   * Structured mesh of 2^l1 x 2^l2 x 2^l3 hexahedra filling a box that is
   * mapped through a constant linear transformation. All elements share the
   * same Jacobian. Elements are numbered by the Morton index of their
   * lattice position.
   */
  class AffineHexMesh
  {
  public:
    AffineHexMesh() = default;
    AffineHexMesh(const Levels &levels, const Box &box, const DenseMatrix &geometry);

    const Levels &levels() const { return levels_; }
    const Box &box() const { return box_; }
    /// Linear map applied to the box.
    const DenseMatrix &geometry() const { return geometry_; }
    /// Element Jacobian, column k = image of the unit reference edge e_k.
    const DenseMatrix &jacobian() const { return jacobian_; }

    std::size_t n_elements() const { return lattice_.size(); }
    std::array<unsigned, 3> elements_per_direction() const { return n_per_dim_; }
    /// Element extent per direction before the linear map.
    std::array<double, 3> widths() const { return widths_; }

    const std::array<unsigned, 3> &lattice(std::size_t element) const { return lattice_[element]; }
    std::size_t element_at(const std::array<unsigned, 3> &lattice) const;

    /// Neighbor across face 2k+s, or -1 on the boundary.
    std::int64_t neighbor(std::size_t element, unsigned face) const
    {
      return neighbors_[element][face];
    }
    bool at_boundary(std::size_t element, unsigned face) const
    {
      return neighbors_[element][face] < 0;
    }

    /// Physical coordinates of the reference point xi in (0,1)^3 of an element.
    std::array<double, 3> map_point(std::size_t element, const std::array<double, 3> &xi) const;

  private:
    Levels levels_ = {0, 0, 0};
    Box box_ = {};
    DenseMatrix geometry_;
    DenseMatrix jacobian_;
    std::array<unsigned, 3> n_per_dim_ = {1, 1, 1};
    std::array<double, 3> widths_ = {1., 1., 1.};
    std::vector<std::array<unsigned, 3>> lattice_;
    std::vector<std::array<std::int64_t, 6>> neighbors_;
    std::vector<std::size_t> lattice_to_element_;
  };

  /// Morton code of a lattice position: bit b of each direction is
  /// interleaved (direction 0 lowest) while b is below that direction's level.
  std::uint64_t morton_encode(const std::array<unsigned, 3> &index, const Levels &levels);
  std::array<unsigned, 3> morton_decode(std::uint64_t code, const Levels &levels);

  AffineHexMesh build_mesh(const Levels &levels, const Box &box, const DenseMatrix &geometry);

  /// Unit cube (0,1)^3 with the identity map.
  AffineHexMesh build_mesh(const Levels &levels);

  /// Reduces all level components equal to the maximum by one.
  AffineHexMesh coarsen(const AffineHexMesh &mesh);

  /// Box (-1,a1) x (-1,a2) x (-1,a3) of the Poisson experiment, with
  /// a_i in {1,3} chosen so that elements are cubes.
  Box experiment_box(const Levels &levels);

  /// Brick and linear map of the operator benchmark.
  Box benchmark_box();
  DenseMatrix benchmark_geometry();

  /**
   * Geometric factors shared by all elements of an affine mesh.
   */
  struct MetricTerms
  {
    DenseMatrix jacobian;
    double det = 0.;
    /// J^{-T}
    DenseMatrix inv_jac;
    /// J^{-1} J^{-T} det(J)
    DenseMatrix merged_cell;
    /// Distance between the faces xi_k = 0 and xi_k = 1, 1/|J^{-T} e_k|.
    std::array<double, 3> h_normal = {};
    /// Outward unit normal of face 2k+s in physical coordinates.
    std::array<std::array<double, 3>, 6> face_normals = {};
    /// det(J) |J^{-T} e_k|: surface element of the faces with normal k.
    std::array<double, 3> face_jxw = {};
    /// J^{-1} n for the face 2k+1: maps reference gradients to the physical
    /// normal derivative (negated on 2k).
    std::array<std::array<double, 3>, 3> normal_ref = {};
  };

  MetricTerms metric_terms(const AffineHexMesh &mesh);
} // namespace dgmf
