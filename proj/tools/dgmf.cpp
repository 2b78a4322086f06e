// Command line driver: basis-info, bench-matvec, solve, models.

#include <dgmf/bench.h>

#include <CLI11.hpp>

#include <cstdio>
#include <iomanip>
#include <iostream>
#include <sstream>

using namespace dgmf;

namespace
{
  struct Options
  {
    unsigned degree = 3;
    std::string basis = "hermite";
    std::string levels;
    unsigned quad = 0;
    int threads = 1;
    std::string precision = "double";
    std::string smoother = "point-jacobi";
    unsigned cheby_degree = 5;
    unsigned repeats = 40;
    unsigned matvecs = 200;
    std::string csv;
  };

  Levels parse_levels(const std::string &text)
  {
    Levels l;
    std::istringstream in(text);
    std::string item;
    unsigned k = 0;
    while (std::getline(in, item, ','))
      {
        if (k == 3)
          throw ParameterError("--levels expects three comma-separated integers, got '" + text + "'");
        try
          {
            std::size_t pos = 0;
            const int v = std::stoi(item, &pos);
            if (pos != item.size() || v < 0)
              throw std::invalid_argument(item);
            l[k++] = static_cast<unsigned>(v);
          }
        catch (const std::exception &)
          {
            throw ParameterError("--levels: invalid entry '" + item + "'");
          }
      }
    if (k != 3)
      throw ParameterError("--levels expects three comma-separated integers, got '" + text + "'");
    return l;
  }

  BenchConfig make_config(const Options &o, const std::string &command)
  {
    BenchConfig c;
    c.command = command;
    c.degree = o.degree;
    c.basis = parse_basis_kind(o.basis);
    c.levels = o.levels.empty() ? default_levels(o.degree) : parse_levels(o.levels);
    c.n_q = o.quad;
    c.threads = o.threads;
    c.precision = parse_precision(o.precision);
    c.smoother = parse_smoother_kind(o.smoother);
    c.cheby_degree = o.cheby_degree;
    c.n_repeats = o.repeats;
    c.n_matvecs = o.matvecs;
    validate(c);
    return c;
  }

  void add_common(CLI::App *cmd, Options &o)
  {
    cmd->add_option("--degree", o.degree, "polynomial degree p")->check(CLI::Range(1u, 30u));
    cmd->add_option("--basis", o.basis, "hermite, gauss-lobatto or gauss")
      ->check(CLI::IsMember({"hermite", "gauss-lobatto", "gauss"}));
    cmd->add_option("--quad", o.quad, "Gauss points per direction (default p+1)");
    cmd->add_option("--threads", o.threads, "number of threads")->check(CLI::PositiveNumber);
  }

  void add_mesh(CLI::App *cmd, Options &o)
  {
    cmd->add_option("--levels", o.levels, "refinement levels L1,L2,L3 (default: >= 2e5 unknowns)");
    cmd->add_option("--precision", o.precision, "double or mixed")->check(CLI::IsMember({"double", "mixed"}));
    cmd->add_option("--csv", o.csv, "write the records to this CSV file");
  }

  void finish(const std::vector<ExperimentRecord> &records, const Options &o)
  {
    std::cout << format_report(records);
    if (!o.csv.empty())
      emit_csv(records, o.csv);
  }

  void basis_info(const Options &o)
  {
    const unsigned p = o.degree;
    const Basis1D basis = build_basis(p, parse_basis_kind(o.basis));
    const QuadratureRule1D quad = gauss_rule(p + 1, QuadratureKind::gauss);
    const BasisMatrices bm = basis_matrices(basis, quad);
    std::cout << "basis " << to_string(basis.kind) << ", degree " << p << '\n';
    if (basis.kind == BasisKind::hermite_like && p >= 3)
      {
        std::cout << std::setprecision(12) << "free root xi_1   " << basis.free_root << '\n'
                  << "alpha_0          " << basis.alpha0 << '\n'
                  << "alpha_1          " << basis.alpha1 << '\n';
        if (!basis.interior_nodes.empty())
          {
            std::cout << "interior nodes  ";
            for (const double x : basis.interior_nodes)
              std::cout << ' ' << x;
            std::cout << '\n';
          }
      }
    std::cout << std::setprecision(6) << "mass condition   " << mass_condition(basis, quad) << '\n';
    if (basis.kind == BasisKind::hermite_like && p >= 3)
      std::cout << "naive Hermite + Legendre condition " << hermite_legendre_condition(p) << '\n';

    std::cout << "\n  i  phi(0)        phi'(0)       phi(1)        phi'(1)\n";
    for (unsigned i = 0; i <= p; ++i)
      std::cout << std::setw(3) << i << "  " << std::setw(12) << bm.face_value[0][i] << "  " << std::setw(12)
                << bm.face_derivative[0][i] << "  " << std::setw(12) << bm.face_value[1][i] << "  "
                << std::setw(12) << bm.face_derivative[1][i] << '\n';

    if (p <= 16)
      {
        const DenseMatrix c = basis.coefficients();
        std::cout << "\nmonomial coefficients (constant term first)\n" << std::setprecision(10);
        for (unsigned i = 0; i <= p; ++i)
          {
            std::cout << "phi_" << i << ':';
            for (unsigned k = 0; k <= p; ++k)
              std::cout << ' ' << c(i, k);
            std::cout << '\n';
          }
      }
  }
} // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Matrix-free DG Poisson solver with Hermite-like bases"};
  app.require_subcommand(1);
  Options o;

  CLI::App *info = app.add_subcommand("basis-info", "print basis construction data and conditioning");
  add_common(info, o);

  CLI::App *matvec = app.add_subcommand("bench-matvec", "time operator applications");
  add_common(matvec, o);
  add_mesh(matvec, o);
  matvec->add_option("--repeats", o.repeats, "number of timed repetitions")->check(CLI::PositiveNumber);
  matvec->add_option("--matvecs", o.matvecs, "products per repetition")->check(CLI::PositiveNumber);

  CLI::App *solve = app.add_subcommand("solve", "multigrid-preconditioned CG on the Poisson problem");
  add_common(solve, o);
  add_mesh(solve, o);
  solve->add_option("--smoother", o.smoother, "point-jacobi, transformed-gl or fdm")
    ->check(CLI::IsMember({"point-jacobi", "transformed-gl", "fdm"}));
  solve->add_option("--cheby-degree", o.cheby_degree, "Chebyshev degree per smoothing")
    ->check(CLI::PositiveNumber);

  CLI::App *models = app.add_subcommand("models", "analytic FLOP and data access models");
  bool all_degrees = false;
  models->add_option("--degree", o.degree, "polynomial degree p")->check(CLI::Range(1u, 30u));
  models->add_option("--basis", o.basis, "hermite, gauss-lobatto or gauss")
    ->check(CLI::IsMember({"hermite", "gauss-lobatto", "gauss"}));
  models->add_flag("--all", all_degrees, "all bases for p = 1..16");
  models->add_option("--csv", o.csv, "write the records to this CSV file");

  CLI11_PARSE(app, argc, argv);

  try
    {
      if (*info)
        basis_info(o);
      else if (*matvec)
        {
          const BenchConfig c = make_config(o, "bench-matvec");
          finish({bench_matvec(c)}, o);
        }
      else if (*solve)
        {
          const BenchConfig c = make_config(o, "solve");
          finish({run_solver_experiment(c)}, o);
        }
      else if (*models)
        {
          std::vector<ExperimentRecord> records;
          BenchConfig c;
          c.command = "models";
          c.degree = o.degree;
          c.basis = parse_basis_kind(o.basis);
          if (all_degrees)
            for (const auto kind : {BasisKind::hermite_like, BasisKind::nodal_gauss_lobatto, BasisKind::nodal_gauss})
              for (unsigned p = 1; p <= 16; ++p)
                {
                  c.basis = kind;
                  c.degree = p;
                  records.push_back(model_record(c));
                }
          else
            records.push_back(model_record(c));
          finish(records, o);
        }
    }
  catch (const ParameterError &e)
    {
      std::cerr << "error: " << e.what() << '\n';
      return 2;
    }
  catch (const NumericalError &e)
    {
      std::cerr << "error: " << e.what() << '\n';
      return 3;
    }
  catch (const std::exception &e)
    {
      std::cerr << "error: " << e.what() << '\n';
      return 1;
    }
  return 0;
}
