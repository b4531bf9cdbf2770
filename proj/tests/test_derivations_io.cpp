#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "isometrize/cli.hpp"
#include "isometrize/derivations.hpp"
#include "isometrize/io.hpp"
#include "isometrize/report.hpp"
#include "oracles.hpp"

using namespace isometrize;
namespace fs = std::filesystem;

namespace {

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::IoError;
}

/// Commuting unitaries u diag(phases_i) u* on Z^d.
Representation unitary_lattice_rep(int d, Eigen::Index dim, Rng& rng) {
  ComplexMatrix u = random_unitary(dim, rng);
  std::map<std::string, ComplexMatrix> images;
  for (int i = 0; i < d; ++i)
    images["e" + std::to_string(i + 1)] = u * random_phases(dim, rng).asDiagonal() * u.adjoint();
  return Representation(GroupDescriptor::int_lattice(d), images);
}

std::map<std::string, ComplexMatrix> inner_images(const Representation& rep, const ComplexMatrix& t0) {
  std::map<std::string, ComplexMatrix> d;
  for (std::size_t i = 0; i < rep.generator_count(); ++i)
    d[rep.generator_name(i)] = rep.image(i) * t0 - t0 * rep.image(i);
  return d;
}

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() / ("isometrize_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }

  const fs::path& path() const { return path_; }

  fs::path write(const std::string& name, const std::string& text) const {
    fs::path p = path_ / name;
    std::ofstream(p) << text;
    return p;
  }

 private:
  fs::path path_;
};

bool bit_equal(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

TEST(Derivations, InnerDerivationRecovered) {
  Rng rng(21);
  for (int d : {1, 2}) {
    Representation rep = unitary_lattice_rep(d, 3, rng);
    ComplexMatrix t0 = random_gaussian(3, 3, rng);
    DerivationMap dm(rep, inner_images(rep, t0));
    EXPECT_TRUE(leibniz_check(dm, 128, 0).ok);
    FolnerFamily f(rep.descriptor());
    InnernessCertificate c = extract_inner(dm, f);
    EXPECT_LE(c.residual, 1e-8);
    // T and T0 differ by an element of the commutant.
    ComplexMatrix diff = c.t - t0;
    for (std::size_t i = 0; i < rep.generator_count(); ++i)
      EXPECT_LE(oracle::norm2(rep.image(i) * diff - diff * rep.image(i)), 2e-8);
    ASSERT_TRUE(c.corroboration.has_value());
    EXPECT_TRUE(c.corroboration->ok) << c.corroboration->failure;
    EXPECT_LE(c.corroboration->reconstruction_residual, 1e-6);
    EXPECT_FALSE(c.scan.divergent);
  }
}

TEST(Derivations, MinimumNormSolution) {
  Rng rng(22);
  Representation rep = unitary_lattice_rep(1, 3, rng);
  ComplexMatrix zero = ComplexMatrix::Zero(3, 3);
  DerivationMap dm(rep, {{"e1", zero}});
  EXPECT_LT(oracle::norm2(solve_inner(dm)), 1e-15);
  // With pi = I every T works; the minimum-norm choice for D = 0 is 0.
  DerivationMap trivial(Representation(GroupDescriptor::int_lattice(1), {{"e1", identity(2)}}),
                        {{"e1", ComplexMatrix::Zero(2, 2)}});
  InnerOptions o;
  o.corroborate = false;
  EXPECT_LT(oracle::norm2(extract_inner(trivial, FolnerFamily(GroupDescriptor::int_lattice(1)), o).t), 1e-15);
  // A commutant component added to T0 is projected away: the solution is orthogonal to the commutant.
  ComplexMatrix t0 = random_gaussian(3, 3, rng);
  DerivationMap inner(rep, inner_images(rep, t0));
  ComplexMatrix t = solve_inner(inner);
  ComplexMatrix c = rep.image(0);  // commutes with itself
  EXPECT_LT(std::abs((c.adjoint() * t).trace()), 1e-10);
}

TEST(Derivations, ConstantImageOnIntegersDiverges) {
  // pi = I, D(1) = I extends to D(n) = nI: Leibniz holds but no bound does.
  DerivationMap dm(Representation(GroupDescriptor::int_lattice(1), {{"e1", identity(2)}}), {{"e1", identity(2)}});
  EXPECT_TRUE(leibniz_check(dm, 64, 0).ok);
  DerivationScan s = derivation_bound_scan(dm, FolnerFamily(GroupDescriptor::int_lattice(1)), 16);
  EXPECT_TRUE(s.divergent);
  try {
    extract_inner(dm, FolnerFamily(GroupDescriptor::int_lattice(1)));
    FAIL();
  } catch (const HypothesisFailed& e) {
    EXPECT_TRUE(e.contains(Hypothesis::BoundC));
  }
}

TEST(Derivations, RandomImagesOnZ2FailLeibniz) {
  Rng rng(23);
  Representation rep = unitary_lattice_rep(2, 3, rng);
  DerivationMap dm(rep, {{"e1", random_gaussian(3, 3, rng)}, {"e2", random_gaussian(3, 3, rng)}});
  EXPECT_FALSE(leibniz_check(dm, 256, 0).ok);
  EXPECT_EQ(code_of([&] { build_pi_D(dm, 256, 0); }), ErrorCode::LeibnizFailed);
}

TEST(Derivations, EvaluatorMatchesLeibnizExpansion) {
  // D(n) = sum_{k<n} pi^k D(1) pi^{n-1-k} for n > 0.
  Rng rng(24);
  Representation rep = unitary_lattice_rep(1, 2, rng);
  ComplexMatrix d1 = random_gaussian(2, 2, rng);
  DerivationMap dm(rep, {{"e1", d1}});
  DerivationEvaluator eval(dm);
  ComplexMatrix p = rep.image(0);
  for (int n : {1, 2, 5}) {
    ComplexMatrix expected = ComplexMatrix::Zero(2, 2);
    for (int k = 0; k < n; ++k) expected += oracle::power(p, k) * d1 * oracle::power(p, n - 1 - k);
    EXPECT_LT(oracle::norm2(eval(Element{{n, 0, 0, 0}}).d - expected), 1e-12);
  }
  // D(-1) = -pi^{-1} D(1) pi^{-1}.
  EXPECT_LT(oracle::norm2(eval(Element{{-1, 0, 0, 0}}).d + p.adjoint() * d1 * p.adjoint()), 1e-12);
}

TEST(Derivations, NonInnerDerivationIsUnbounded) {
  // pi diagonal and D(1) diagonal: D(1) is outside the range of T -> pi T - T pi,
  // and D(n)_{00} = n i^{n-1} D(1)_{00} grows linearly.
  ComplexMatrix p(2, 2);
  p << Complex(0, 1), 0, 0, -1;
  ComplexMatrix d = ComplexMatrix::Zero(2, 2);
  d(0, 0) = 1e-3;
  DerivationMap dm(Representation(GroupDescriptor::int_lattice(1), {{"e1", p}}), {{"e1", d}});
  EXPECT_NEAR(inner_residual(dm, solve_inner(dm)), 1e-3, 1e-12);
  try {
    extract_inner(dm, FolnerFamily(GroupDescriptor::int_lattice(1)));
    FAIL();
  } catch (const HypothesisFailed& e) {
    EXPECT_TRUE(e.contains(Hypothesis::BoundC));
  }
}

TEST(Derivations, ResidualAboveTolerance) {
  Rng rng(28);
  Representation rep = unitary_lattice_rep(1, 3, rng);
  DerivationMap dm(rep, inner_images(rep, 1e3 * random_gaussian(3, 3, rng)));
  InnerOptions o;
  o.tol = 1e-300;
  o.corroborate = false;
  EXPECT_EQ(code_of([&] { extract_inner(dm, FolnerFamily(rep.descriptor()), o); }), ErrorCode::NotInnerAtTolerance);
}

TEST(Derivations, RejectsNonUnitaryBase) {
  ComplexMatrix t(1, 1);
  t << 2.0;
  EXPECT_EQ(code_of([&] {
              DerivationMap(Representation(GroupDescriptor::int_lattice(1), {{"e1", t}}), {{"e1", t}});
            }),
            ErrorCode::InvalidArgument);
}

TEST(Io, MatrixSchemas) {
  ComplexMatrix one = parse_matrix_json(json::parse(R"({"rows":1,"cols":1,"data":[[[1,0]]]})"));
  EXPECT_EQ(one, identity(1));
  ComplexMatrix m = parse_matrix_json(json::parse(R"([[[1,2],3],[0,[0,-1]]])"));
  EXPECT_EQ(m(0, 0), Complex(1, 2));
  EXPECT_EQ(m(0, 1), Complex(3, 0));
  EXPECT_EQ(m(1, 1), Complex(0, -1));
  EXPECT_EQ(code_of([] { parse_matrix_json(json::parse(R"([[1,2],[3]])")); }), ErrorCode::SchemaError);
  EXPECT_EQ(code_of([] { parse_matrix_json(json::parse(R"({"rows":2,"cols":1,"data":[[[1,0]]]})")); }),
            ErrorCode::SchemaError);
  EXPECT_EQ(code_of([] { parse_matrix_json(json::parse(R"([[["nan",0]]])")); }), ErrorCode::NonFinite);
  EXPECT_EQ(code_of([] { parse_json_text("[[[NaN, 0]]]", "x"); }), ErrorCode::NonFinite);
  EXPECT_EQ(code_of([] { parse_matrix_json(json::parse(R"([[["a",0]]])")); }), ErrorCode::SchemaError);
  try {
    parse_json_text("[\n  [1,\n  2 3]]", "m.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
    EXPECT_NE(std::string(e.what()).find("m.json:3:"), std::string::npos) << e.what();
  }
  try {
    parse_matrix_json(json::parse(R"({"rows":2,"cols":2,"data":[[1,2],[3]]})"));
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("$.data[1]"), std::string::npos) << e.what();
  }
  EXPECT_EQ(code_of([] { parse_matrix_file("/nonexistent/x.json"); }), ErrorCode::IoError);
}

TEST(Io, MatrixRoundTrip) {
  Rng rng(25);
  ComplexMatrix m = random_gaussian(3, 4, rng);
  EXPECT_EQ(parse_matrix_json(json::parse(matrix_to_json(m).dump())), m);
}

TEST(Io, RepresentationFiles) {
  TempDir dir;
  dir.write("c3.json", "[[0,1,2],[1,2,0],[2,0,1]]");
  fs::path rep_path = dir.write("rep.json", R"({
    "group": "finite:c3.json", "dim": 1,
    "generators": {"g0": [[1]], "g1": [[[-0.5, 0.8660254037844386]]], "g2": [[[-0.5, -0.8660254037844386]]]}
  })");
  RepresentationFile f = parse_representation_file(rep_path);
  EXPECT_EQ(f.rep.descriptor().order(), 3u);
  EXPECT_FALSE(f.derivation.has_value());

  auto parse = [](const char* text) { return parse_representation_json(json::parse(text)); };
  EXPECT_EQ(code_of([&] { parse(R"({"group":"Z^1","dim":1,"generators":{"x":[[1]]}})"); }), ErrorCode::SchemaError);
  EXPECT_EQ(code_of([&] { parse(R"({"group":"Z^1","dim":2,"generators":{"e1":[[1]]}})"); }), ErrorCode::SchemaError);
  EXPECT_EQ(code_of([&] { parse(R"({"group":"Q","dim":1,"generators":{"e1":[[1]]}})"); }), ErrorCode::SchemaError);
  RepresentationFile d = parse(R"({"group":"Z^1","dim":1,"generators":{"e1":[[1]]},"derivation":{"e1":[[0]]}})");
  ASSERT_TRUE(d.derivation.has_value());
  EXPECT_EQ(d.derivation->at("e1")(0, 0), Complex(0, 0));
}

TEST(Report, JsonRoundTripIsBitExact) {
  Rng rng(26);
  Report r;
  r.command = "analyze-operator";
  r.status = ReportStatus::Certified;
  r.message = "ok";
  r.reasons = {"a", "b"};
  std::vector<double> specials{0.1, -0.0, 5e-324, 1.7976931348623157e308, std::nan(""), INFINITY, -INFINITY,
                               1.0 / 3.0};
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int k = 0; k < 50; ++k) specials.push_back(u(rng) * std::exp(u(rng) / 2e4));
  for (std::size_t i = 0; i < specials.size(); ++i) {
    r.add("d" + std::to_string(i), specials[i]);
    r.row(static_cast<std::int64_t>(i), "item,\"quoted\"", specials[i]);
  }
  CertificateSummary c;
  c.kind = "isometry";
  c.residual = 1.2345678901234567e-13;
  c.tolerance = 1e-8;
  ComplexMatrix m = random_gaussian(2, 3, rng);
  m(0, 0) = Complex(std::nan(""), -INFINITY);
  c.matrices.push_back({"D", m});
  c.values.push_back({"cond", 3.0000000000000004});
  r.certificate = c;

  Report back = report_from_json(json::parse(report_to_json(r).dump(2)));
  EXPECT_EQ(back.command, r.command);
  EXPECT_EQ(back.status, r.status);
  EXPECT_EQ(back.reasons, r.reasons);
  ASSERT_EQ(back.diagnostics.size(), r.diagnostics.size());
  for (std::size_t i = 0; i < r.diagnostics.size(); ++i) {
    EXPECT_TRUE(bit_equal(back.diagnostics[i].value, r.diagnostics[i].value) || std::isnan(r.diagnostics[i].value))
        << i;
    EXPECT_EQ(std::isnan(back.diagnostics[i].value), std::isnan(r.diagnostics[i].value));
    EXPECT_TRUE(bit_equal(back.table[i].value, r.table[i].value) || std::isnan(r.table[i].value));
    EXPECT_EQ(back.table[i].item, r.table[i].item);
  }
  ASSERT_TRUE(back.certificate.has_value());
  EXPECT_TRUE(bit_equal(back.certificate->residual, c.residual));
  const ComplexMatrix& bm = back.certificate->matrices[0].matrix;
  EXPECT_TRUE(std::isnan(bm(0, 0).real()));
  EXPECT_EQ(bm(0, 0).imag(), -INFINITY);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (i || j) {
        EXPECT_TRUE(bit_equal(bm(i, j).real(), m(i, j).real()));
        EXPECT_TRUE(bit_equal(bm(i, j).imag(), m(i, j).imag()));
      }
  EXPECT_EQ(code_of([] { report_from_json(json::parse(R"({"command":"x"})")); }), ErrorCode::SchemaError);
}

TEST(Report, CsvLayout) {
  Report r;
  r.command = "folner-report";
  r.status = ReportStatus::Completed;
  r.row(4, "e1", 0.25);
  r.row(4, "sfc:e,1", 0.125);
  r.add("n_max_reached", 4);
  std::string csv = report_to_csv(r);
  EXPECT_EQ(csv, "N,item,value\n4,e1,0.25\n4,\"sfc:e,1\",0.125\n,status,Completed\n,n_max_reached,4\n");
}

TEST(Cli, AnalyzeOperatorClosedForm) {
  TempDir dir;
  RunConfig cfg;
  cfg.input_path = dir.write("t.json", R"({"rows":2,"cols":2,"data":[[[0,0],[2,0]],[[0.5,0],[0,0]]]})").string();
  Report r = execute(cfg);
  ASSERT_EQ(r.status, ReportStatus::Certified) << r.message;
  ASSERT_TRUE(r.certificate.has_value());
  EXPECT_LE(r.certificate->residual, cfg.tol);
  const ComplexMatrix& d = r.certificate->matrices.at(0).matrix;
  EXPECT_EQ(r.certificate->matrices.at(0).name, "D");
  EXPECT_NEAR(d(0, 0).real(), std::sqrt(0.625), 1e-12);
  EXPECT_NEAR(d(1, 1).real(), std::sqrt(2.5), 1e-12);
  EXPECT_NEAR(std::abs(d(0, 1)), 0.0, 1e-12);
  std::ostringstream out, err;
  EXPECT_EQ(run(cfg, out, err), 0);
}

TEST(Cli, ExitCodesPartitionRuns) {
  TempDir dir;
  RunConfig cfg;
  cfg.input_path = dir.write("half.json", "[[0.5]]").string();
  Report r = execute(cfg);
  EXPECT_EQ(r.status, ReportStatus::HypothesisFailed);
  EXPECT_NE(std::find(r.reasons.begin(), r.reasons.end(), "lower_bound_collapse"), r.reasons.end());
  EXPECT_FALSE(r.certificate.has_value());
  std::ostringstream out, err;
  EXPECT_EQ(run(cfg, out, err), 2);

  cfg.input_path = (dir.path() / "missing.json").string();
  EXPECT_EQ(run(cfg, out, err), 1);
  cfg.input_path = dir.write("bad.json", "[[1,2],[3]]").string();
  EXPECT_EQ(execute(cfg).reasons.at(0), "SchemaError");
  cfg.input_path = dir.write("id.json", "[[1]]").string();
  cfg.n_max = 2;
  EXPECT_EQ(run(cfg, out, err), 1);
  cfg.n_max.reset();
  cfg.tol = -1;
  EXPECT_EQ(run(cfg, out, err), 1);

  cfg = RunConfig{};
  cfg.command = Command::UnitarizeRep;
  cfg.input_path = dir.write("n.json", R"({"group":"N^1","dim":1,"generators":{"e1":[[1]]}})").string();
  EXPECT_EQ(run(cfg, out, err), 1);
  cfg.command = Command::IsometrizeSemigroup;
  EXPECT_EQ(run(cfg, out, err), 0);
}

TEST(Cli, FolnerReportMatchesEnumeration) {
  RunConfig cfg;
  cfg.command = Command::FolnerReport;
  cfg.group = "Z^2";
  cfg.n_max = 16;
  cfg.kappa = 4.0;
  cfg.format = OutputFormat::Csv;
  Report r = execute(cfg);
  ASSERT_EQ(r.status, ReportStatus::Completed) << r.message;
  std::set<oracle::Point> box = oracle::int_box(2, 16);
  double expected = static_cast<double>(oracle::symdiff_after_shift(box, {1, 0})) / (33.0 * 33.0);
  bool found = false;
  for (const TableRow& row : r.table)
    if (row.n == 16 && row.item == "e1") {
      found = true;
      EXPECT_EQ(row.value, expected);
    }
  EXPECT_TRUE(found);
  std::string csv = render(r, OutputFormat::Csv);
  EXPECT_EQ(csv.rfind("N,item,value\n", 0), 0u);
  EXPECT_NE(csv.find("\n16,e1,"), std::string::npos);

  cfg.group = "heisenberg3";
  cfg.n_max = 6;
  Report h = execute(cfg);
  EXPECT_EQ(h.status, ReportStatus::Completed) << h.message;
  cfg.group = "Q";
  EXPECT_EQ(execute(cfg).status, ReportStatus::Error);
  cfg.group = "Z^4";
  cfg.n_max = 100;
  EXPECT_EQ(execute(cfg).reasons.at(0), "SetTooLarge");
}

TEST(Cli, RepAndDerivationCommands) {
  TempDir dir;
  Rng rng(27);
  Representation rep = unitary_lattice_rep(2, 2, rng);
  ComplexMatrix t0 = random_gaussian(2, 2, rng);
  json j;
  j["group"] = "Z^2";
  j["dim"] = 2;
  for (const auto& [name, m] : rep.images_by_name()) j["generators"][name] = matrix_to_json(m);
  for (const auto& [name, m] : inner_images(rep, t0)) j["derivation"][name] = matrix_to_json(m);
  RunConfig cfg;
  cfg.command = Command::DerivationReport;
  cfg.input_path = dir.write("d.json", j.dump()).string();
  Report r = execute(cfg);
  ASSERT_EQ(r.status, ReportStatus::Certified) << r.message;
  EXPECT_LE(r.certificate->residual, 1e-8);

  cfg.command = Command::UnitarizeRep;
  Report u = execute(cfg);
  ASSERT_EQ(u.status, ReportStatus::Certified) << u.message;
  cfg.format = OutputFormat::Json;
  Report again = report_from_json(json::parse(render(u, OutputFormat::Json)));
  EXPECT_EQ(again.table.size(), u.table.size());

  j.erase("derivation");
  cfg.command = Command::DerivationReport;
  cfg.input_path = dir.write("nod.json", j.dump()).string();
  EXPECT_EQ(execute(cfg).status, ReportStatus::Error);

  json jordan;
  jordan["group"] = "Z^1";
  jordan["dim"] = 2;
  jordan["generators"]["e1"] = json::parse("[[1,1],[0,1]]");
  cfg.command = Command::UnitarizeRep;
  cfg.input_path = dir.write("j.json", jordan.dump()).string();
  Report jr = execute(cfg);
  EXPECT_EQ(jr.status, ReportStatus::HypothesisFailed);
  EXPECT_EQ(jr.reasons.at(0), "bound_c");
  std::ostringstream out, err;
  EXPECT_EQ(run(cfg, out, err), 2);
}
