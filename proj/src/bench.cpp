#include <dgmf/bench.h>

#include <chrono>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

namespace dgmf
{
  std::string_view to_string(Precision precision)
  {
    return precision == Precision::mixed ? "mixed" : "double";
  }

  Precision parse_precision(std::string_view name)
  {
    if (name == "double")
      return Precision::double_precision;
    if (name == "mixed")
      return Precision::mixed;
    throw ParameterError("unknown precision '" + std::string(name) + "' (expected double or mixed)");
  }

  void validate(const BenchConfig &c)
  {
    if (c.degree < 1)
      throw ParameterError("degree must be at least 1");
    if (c.n_repeats < 1)
      throw ParameterError("repeats must be at least 1");
    if (c.n_matvecs < 1)
      throw ParameterError("matvecs must be at least 1");
    if (c.threads < 1)
      throw ParameterError("threads must be at least 1");
    if (c.cheby_degree < 1)
      throw ParameterError("cheby-degree must be at least 1");
    for (const unsigned l : c.levels)
      if (l > 20)
        throw ParameterError("refinement level above 20");
    if (c.n_q != 0 && c.n_q < c.degree + 1)
      throw ParameterError("quad must be at least p+1");
    if (c.command != "models" && double(n_dofs(c)) > c.max_dofs)
      throw ParameterError("problem with " + std::to_string(n_dofs(c)) + " unknowns exceeds the limit of " +
                           std::to_string(static_cast<std::size_t>(c.max_dofs)));
  }

  std::size_t n_dofs(const BenchConfig &c)
  {
    const std::size_t n = c.degree + 1;
    return n * n * n << (c.levels[0] + c.levels[1] + c.levels[2]);
  }

  Levels default_levels(unsigned degree, double min_dofs)
  {
    const double per_element = std::pow(degree + 1., 3);
    unsigned total = 0;
    while (per_element * std::ldexp(1., int(total)) < min_dofs)
      ++total;
    const unsigned base = total / 3, extra = total % 3;
    return {base + (extra > 0), base + (extra > 1), base};
  }

  double model_line_flops(unsigned n)
  {
    const unsigned h = n / 2;
    const bool odd = n % 2 == 1;
    double f = 2. * h; // sums and differences of mirrored inputs
    if (h > 0)
      f += h * (2. + 4. * (h - 1) + (odd ? 2. : 0.) + 2.);
    if (odd)
      f += 2. * h + 1.; // middle row
    return f;
  }

  double model_flops(unsigned degree, BasisKind basis)
  {
    if (degree < 1)
      throw ParameterError("model_flops: degree must be at least 1");
    const double n = degree + 1., line = model_line_flops(degree + 1);
    const bool collocated = basis == BasisKind::nodal_gauss;
    const double cell_sweeps = collocated ? 6. : 12.;
    const double face_sweeps = collocated ? 2. : 6.;
    double normal = 0.;
    switch (basis)
      {
        case BasisKind::hermite_like:
          normal = 3. * n * n;
          break;
        case BasisKind::nodal_gauss_lobatto:
          normal = 2. * n * n * n;
          break;
        case BasisKind::nodal_gauss:
          normal = 4. * n * n * n;
          break;
      }
    const double cell = cell_sweeps * n * n * line + 18. * n * n * n;
    const double face = 2. * (normal + face_sweeps * n * line) + 23. * n * n;
    return (cell + 6. * face) / (n * n * n);
  }

  double model_access(unsigned degree, unsigned dim, BasisKind basis)
  {
    if (degree < 1 || dim < 1)
      throw ParameterError("model_access: degree and dimension must be at least 1");
    const double n = degree + 1.;
    if (basis == BasisKind::hermite_like)
      return std::pow(n, dim) + 4. * dim * std::pow(n, dim - 1.);
    return (2. * dim + 1.) * std::pow(n, dim);
  }

  namespace
  {
    BenchConfig resolved(const BenchConfig &config)
    {
      validate(config);
      BenchConfig c = config;
      if (c.n_q == 0)
        c.n_q = c.degree + 1;
      return c;
    }

    void fill_models(ExperimentRecord &r)
    {
      r.model_flop_per_dof = model_flops(r.config.degree, r.config.basis);
      r.model_words_per_element = model_access(r.config.degree, 3, r.config.basis);
    }

    class ThreadScope
    {
    public:
      explicit ThreadScope(int n)
        : saved(n_threads())
      {
        set_n_threads(n);
      }
      ~ThreadScope() { set_n_threads(saved); }

    private:
      int saved;
    };

    template <typename Number>
    double time_matvec(const BenchConfig &c, const AffineHexMesh &mesh)
    {
      OperatorOptions options;
      options.n_q = c.n_q;
      const SipOperator<Number> op(build_basis(c.degree, c.basis), mesh, options);
      std::vector<Number> src(op.n_dofs()), dst(op.n_dofs());
      std::mt19937 rng(1);
      std::uniform_real_distribution<double> dist(-1., 1.);
      for (auto &x : src)
        x = static_cast<Number>(dist(rng));
      for (int i = 0; i < 3; ++i)
        op.apply(src, dst);
      double best = std::numeric_limits<double>::max();
      for (unsigned r = 0; r < c.n_repeats; ++r)
        {
          const auto t0 = std::chrono::steady_clock::now();
          for (unsigned m = 0; m < c.n_matvecs; ++m)
            op.apply(src, dst);
          const auto t1 = std::chrono::steady_clock::now();
          best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
        }
      return best;
    }

    template <typename Number>
    SolveResult solve_with(const BenchConfig &c,
                           const Basis1D &basis,
                           const AffineHexMesh &mesh,
                           const SipOperator<double> &op,
                           const std::vector<double> &b,
                           double &seconds)
    {
      MultigridOptions options;
      options.smoother = c.smoother;
      options.chebyshev.degree = c.cheby_degree;
      options.operator_options.n_q = c.n_q;
      const MgHierarchy<Number> mg(basis, mesh, options);
      const auto precond = vcycle_preconditioner(mg);
      const auto t0 = std::chrono::steady_clock::now();
      SolveResult res = pcg_solve([&op](std::span<double> dst, std::span<const double> src) { op.apply(src, dst); },
                                  precond, b, 1e-9, 1000);
      seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      return res;
    }
  } // namespace

  ExperimentRecord bench_matvec(const BenchConfig &config)
  {
    ExperimentRecord r;
    r.config = resolved(config);
    r.config.command = "bench-matvec";
    const BenchConfig &c = r.config;
    const ThreadScope threads(c.threads);
    const AffineHexMesh mesh = build_mesh(c.levels, benchmark_box(), benchmark_geometry());
    const double t = c.precision == Precision::mixed ? time_matvec<float>(c, mesh) : time_matvec<double>(c, mesh);
    r.n_dof = n_dofs(c);
    r.seconds = t;
    r.gdof_per_s = 1e-9 * double(c.n_matvecs) * double(*r.n_dof) / t;
    fill_models(r);
    return r;
  }

  ExperimentRecord run_solver_experiment(const BenchConfig &config)
  {
    ExperimentRecord r;
    r.config = resolved(config);
    r.config.command = "solve";
    const BenchConfig &c = r.config;
    const ThreadScope threads(c.threads);
    const AffineHexMesh mesh = build_mesh(c.levels, experiment_box(c.levels), DenseMatrix::identity(3));
    const Basis1D basis = build_basis(c.degree, c.basis);
    OperatorOptions options;
    options.n_q = c.n_q;
    const SipOperator<double> op(basis, mesh, options);
    const std::vector<double> b = manufactured_rhs(op);
    double seconds = 0.;
    const SolveResult res = c.precision == Precision::mixed
                              ? solve_with<float>(c, basis, mesh, op, b, seconds)
                              : solve_with<double>(c, basis, mesh, op, b, seconds);
    r.n_dof = op.n_dofs();
    r.seconds = seconds;
    r.n9 = res.iterations;
    r.rho = res.rate;
    r.mdof_per_s_solved = 1e-6 * double(op.n_dofs()) / seconds;
    fill_models(r);
    return r;
  }

  ExperimentRecord model_record(const BenchConfig &config)
  {
    ExperimentRecord r;
    r.config = resolved(config);
    r.config.command = "models";
    fill_models(r);
    return r;
  }

  // ---------------------------------------------------------------------

  const std::vector<std::string> &csv_columns()
  {
    static const std::vector<std::string> columns = {
      "cmd",     "basis",     "p",     "l1",  "l2",           "l3",
      "nq",      "threads",   "precision", "smoother", "ndof", "seconds",
      "gdofs",   "n9",        "rho",   "mdofs_solved", "model_flop_per_dof", "model_words_per_elem"};
    return columns;
  }

  namespace
  {
    std::string num(double x)
    {
      std::ostringstream s;
      s << std::setprecision(6) << x;
      return s.str();
    }

    template <typename T>
    std::string opt(const std::optional<T> &x)
    {
      if (!x)
        return "";
      if constexpr (std::is_integral_v<T>)
        return std::to_string(*x);
      else
        return num(*x);
    }

    std::vector<std::string> split(const std::string &line)
    {
      std::vector<std::string> out;
      std::string field;
      std::istringstream s(line);
      while (std::getline(s, field, ','))
        out.push_back(field);
      if (!line.empty() && line.back() == ',')
        out.emplace_back();
      return out;
    }

    double to_double(const std::string &s, const char *what)
    {
      try
        {
          std::size_t pos = 0;
          const double v = std::stod(s, &pos);
          if (pos != s.size())
            throw std::invalid_argument(s);
          return v;
        }
      catch (const std::exception &)
        {
          throw ParameterError(std::string("CSV: invalid value '") + s + "' in column " + what);
        }
    }

    unsigned long long to_uint(const std::string &s, const char *what)
    {
      const double v = to_double(s, what);
      if (v < 0 || v != std::floor(v))
        throw ParameterError(std::string("CSV: expected a non-negative integer in column ") + what);
      return static_cast<unsigned long long>(v);
    }
  } // namespace

  std::string to_csv(const std::vector<ExperimentRecord> &records)
  {
    std::ostringstream out;
    const auto &cols = csv_columns();
    for (std::size_t i = 0; i < cols.size(); ++i)
      out << (i ? "," : "") << cols[i];
    out << '\n';
    for (const auto &r : records)
      {
        const BenchConfig &c = r.config;
        const bool solve = c.command == "solve";
        out << c.command << ',' << to_string(c.basis) << ',' << c.degree << ',' << c.levels[0] << ','
            << c.levels[1] << ',' << c.levels[2] << ',' << (c.n_q ? c.n_q : c.degree + 1) << ',' << c.threads
            << ',' << to_string(c.precision) << ',' << (solve ? std::string(to_string(c.smoother)) : "")
            << ',' << opt(r.n_dof) << ',' << opt(r.seconds) << ',' << opt(r.gdof_per_s) << ',' << opt(r.n9)
            << ',' << opt(r.rho) << ',' << opt(r.mdof_per_s_solved) << ',' << num(r.model_flop_per_dof) << ','
            << num(r.model_words_per_element) << '\n';
      }
    return out.str();
  }

  std::vector<ExperimentRecord> parse_csv(const std::string &text)
  {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line))
      throw ParameterError("CSV: missing header");
    const auto &cols = csv_columns();
    if (split(line) != cols)
      throw ParameterError("CSV: unexpected header '" + line + "'");
    std::vector<ExperimentRecord> records;
    while (std::getline(in, line))
      {
        if (line.empty())
          continue;
        const auto f = split(line);
        if (f.size() != cols.size())
          throw ParameterError("CSV: row with " + std::to_string(f.size()) + " fields, expected " +
                               std::to_string(cols.size()));
        ExperimentRecord r;
        BenchConfig &c = r.config;
        c.command = f[0];
        c.basis = parse_basis_kind(f[1]);
        c.degree = static_cast<unsigned>(to_uint(f[2], "p"));
        for (unsigned d = 0; d < 3; ++d)
          c.levels[d] = static_cast<unsigned>(to_uint(f[3 + d], cols[3 + d].c_str()));
        c.n_q = static_cast<unsigned>(to_uint(f[6], "nq"));
        c.threads = static_cast<int>(to_uint(f[7], "threads"));
        c.precision = parse_precision(f[8]);
        if (!f[9].empty())
          c.smoother = parse_smoother_kind(f[9]);
        if (!f[10].empty())
          r.n_dof = static_cast<std::size_t>(to_uint(f[10], "ndof"));
        if (!f[11].empty())
          r.seconds = to_double(f[11], "seconds");
        if (!f[12].empty())
          r.gdof_per_s = to_double(f[12], "gdofs");
        if (!f[13].empty())
          r.n9 = static_cast<unsigned>(to_uint(f[13], "n9"));
        if (!f[14].empty())
          r.rho = to_double(f[14], "rho");
        if (!f[15].empty())
          r.mdof_per_s_solved = to_double(f[15], "mdofs_solved");
        r.model_flop_per_dof = to_double(f[16], "model_flop_per_dof");
        r.model_words_per_element = to_double(f[17], "model_words_per_elem");
        records.push_back(std::move(r));
      }
    return records;
  }

  void emit_csv(const std::vector<ExperimentRecord> &records, const std::string &path)
  {
    std::ofstream out(path);
    if (!out)
      throw std::runtime_error("cannot open '" + path + "' for writing");
    out << to_csv(records);
    out.close();
    if (!out)
      throw std::runtime_error("failed writing '" + path + "'");
  }

  std::string format_report(const std::vector<ExperimentRecord> &records)
  {
    std::vector<std::vector<std::string>> rows;
    {
      const std::string csv = to_csv(records);
      std::istringstream in(csv);
      std::string line;
      while (std::getline(in, line))
        rows.push_back(split(line));
    }
    // drop columns that are empty in every record
    const std::size_t n_cols = csv_columns().size();
    std::vector<bool> keep(n_cols, false);
    std::vector<std::size_t> width(n_cols, 0);
    for (std::size_t r = 1; r < rows.size(); ++r)
      for (std::size_t c = 0; c < n_cols; ++c)
        if (!rows[r][c].empty())
          keep[c] = true;
    for (const auto &row : rows)
      for (std::size_t c = 0; c < n_cols; ++c)
        width[c] = std::max(width[c], row[c].size());
    std::ostringstream out;
    for (const auto &row : rows)
      {
        bool first = true;
        for (std::size_t c = 0; c < n_cols; ++c)
          if (keep[c] || rows.size() == 1)
            {
              out << (first ? "" : "  ") << std::setw(static_cast<int>(width[c])) << row[c];
              first = false;
            }
        out << '\n';
      }
    return out.str();
  }
} // namespace dgmf
