// cutstack: command line front end. Every command writes into --out and finishes
// with manifest.json (file names, sizes, SHA-256). Exit codes: 0 ok, 1 computation
// error, 2 usage error.

#include <openssl/evp.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "cutstack/construction.hpp"
#include "cutstack/error.hpp"
#include "cutstack/lz78.hpp"
#include "cutstack/solovay.hpp"
#include "cutstack/transform.hpp"

namespace fs = std::filesystem;
using namespace cutstack;
using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned len = 0;
  EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr);
  std::ostringstream os;
  for (unsigned i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

// Files of one command run. Written in memory, flushed together with the manifest;
// on failure nothing already flushed is left behind.
class OutputSet {
 public:
  OutputSet(fs::path dir, std::string command, json config)
      : dir_(std::move(dir)), command_(std::move(command)), config_(std::move(config)) {}

  std::ostringstream& file(const std::string& name) {
    order_.push_back(name);
    return files_[name];
  }

  void commit() {
    fs::create_directories(dir_);
    json list = json::array();
    try {
      for (const auto& name : order_) {
        const std::string data = files_[name].str();
        write(name, data);
        list.push_back({{"file", name}, {"bytes", data.size()}, {"sha256", sha256_hex(data)}});
      }
      json manifest = {{"command", command_}, {"config", config_}, {"outputs", list}};
      write("manifest.json", manifest.dump(2) + "\n");
    } catch (...) {
      rollback();
      throw;
    }
  }

 private:
  void write(const std::string& name, const std::string& data) {
    const fs::path p = dir_ / name;
    written_.push_back(p);
    std::ofstream os(p, std::ios::binary);
    os << data;
    if (!os) throw Error(Module::cli, "write_failed", "cannot write " + p.string());
  }
  void rollback() {
    std::error_code ec;
    for (const auto& p : written_) fs::remove(p, ec);
  }

  fs::path dir_;
  std::string command_;
  json config_;
  std::vector<std::string> order_;
  std::map<std::string, std::ostringstream> files_;
  std::vector<fs::path> written_;
};

Rational parse_arg(const std::string& what, const std::string& text) {
  try {
    return parse_rational(text);
  } catch (const Error& e) {
    throw UsageError("bad " + what + " '" + text + "': " + e.what());
  }
}

Rational parse_r(const std::string& text) {
  Rational r = parse_arg("r", text);
  if (!(r > 0 && r <= ratio(1, 8)) || !is_dyadic(r)) throw UsageError("r must be dyadic with 0 < r <= 1/8, got " + text);
  return r;
}

SigmaFn parse_sigma_arg(const std::string& text) {
  try {
    return parse_sigma(text);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

struct ConstructOptions {
  std::string r = "1/8";
  std::string sigma = "log2";
  std::vector<std::uint64_t> toy_h{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  bool schedule = false;  // use the computed schedule instead of the toy list
  unsigned fold_cap = 2;
  unsigned stage_cap = 5;
  std::uint64_t piece_cap = 4000000;

  void add(CLI::App* app) {
    app->add_option("--r", r, "dyadic r in (0, 1/8]")->capture_default_str();
    app->add_option("--sigma", sigma, "log2 | sqrt | linear:p/q | table:v0,v1,...")->capture_default_str();
    app->add_option("--toy-h", toy_h, "explicit heights h_{-2}, h_{-1}, h_0, ... (toy mode)")->delimiter(',');
    app->add_flag("--schedule", schedule, "use the computed schedule (not toy)");
    app->add_option("--fold-cap", fold_cap, "largest fold count R tried")->capture_default_str();
    app->add_option("--stage-cap", stage_cap, "largest stage built")->capture_default_str();
    app->add_option("--piece-cap", piece_cap, "largest number of level pieces swept per stage")->capture_default_str();
  }

  ConstructionConfig config() const {
    ConstructionConfig c;
    c.r = parse_r(r);
    c.sigma = parse_sigma_arg(sigma);
    c.fold_cap = fold_cap;
    c.stage_cap = stage_cap;
    c.piece_cap = piece_cap;
    c.toy = !schedule;
    if (fold_cap < 2) throw UsageError("--fold-cap must be at least 2");
    if (schedule) {
      c.schedule = compute_schedule(c.sigma, c.r, stage_cap + 3);
    } else {
      try {
        c.schedule = toy_schedule(c.r, toy_h);
      } catch (const Error& e) {
        throw UsageError(e.what());
      }
      if (c.schedule.count() < stage_cap + 3) throw UsageError("--toy-h needs h_{-2} .. h_{stage-cap}");
    }
    return c;
  }

  json describe() const {
    return {{"r", r}, {"sigma", sigma}, {"toy_h", toy_h}, {"schedule", schedule}, {"fold_cap", fold_cap},
            {"stage_cap", stage_cap}, {"piece_cap", piece_cap}};
  }
};

std::vector<std::size_t> unique_lengths(const std::vector<Checkpoint>& cps) {
  std::set<std::size_t> s;
  for (const auto& cp : cps) s.insert(cp.length);
  return {s.begin(), s.end()};
}

// Pi_s u Delta_s as one explicit gadget for the orbit tools; refuses big stages.
Gadget explicit_stage(Construction& c, unsigned s, std::uint64_t level_limit) {
  const Stage& st = c.stage(s);
  std::uint64_t levels = 0;
  for (const LazyGadget* g : {st.pi.get(), st.delta.get()}) {
    if (g->size() > (1u << 20)) throw Error(Module::cli, "stage_too_large", "stage " + std::to_string(s) + " has too many columns to materialize");
    for (std::uint64_t col = 0; col < g->size(); ++col) levels += g->height(col);
  }
  if (levels > level_limit)
    throw Error(Module::cli, "stage_too_large", "stage " + std::to_string(s) + " has " + std::to_string(levels) + " levels (limit " + std::to_string(level_limit) + ")");
  Gadget pi = materialize(*st.pi, s), delta = materialize(*st.delta, s);
  return gadget_union({&pi, &delta}, s);
}

BitString read_bits(const fs::path& p) {
  std::ifstream is(p);
  if (!is) throw UsageError("cannot read " + p.string());
  std::string s;
  is >> s;
  try {
    return BitString(s);
  } catch (const Error& e) {
    throw UsageError(p.string() + ": " + e.what());
  }
}

std::vector<std::size_t> read_checkpoint_lengths(const fs::path& p) {
  std::ifstream is(p);
  if (!is) throw UsageError("cannot read " + p.string());
  std::string line;
  std::getline(is, line);  // header
  std::set<std::size_t> lengths;
  while (std::getline(is, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (cells.size() < 5) throw UsageError("malformed checkpoint row: " + line);
    lengths.insert(std::stoull(cells[3]));
  }
  return {lengths.begin(), lengths.end()};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cutstack: cut-and-stack constructions, randomness tests and compression demos"};
  app.require_subcommand(1);
  std::string out = "out";
  app.add_option("--out", out, "output directory")->capture_default_str();

  // schedule
  auto* sched = app.add_subcommand("schedule", "height schedule h_{-2} < h_{-1} < ...");
  std::string s_r = "1/8", s_sigma = "log2";
  std::size_t s_count = 3;
  std::vector<std::uint64_t> s_toy;
  sched->add_option("--r", s_r)->capture_default_str();
  sched->add_option("--sigma", s_sigma)->capture_default_str();
  sched->add_option("--count", s_count, "number of heights from h_{-2}")->capture_default_str();
  sched->add_option("--toy-h", s_toy, "explicit list, echoed with the toy tag")->delimiter(',');

  // build
  auto* build = app.add_subcommand("build", "build stages 0..s with measure and map audits");
  ConstructOptions b_opt;
  unsigned b_stage = 3;
  std::uint64_t b_limit = 200000;
  b_opt.add(build);
  build->add_option("--stage", b_stage, "last stage")->capture_default_str();
  build->add_option("--audit-levels", b_limit, "exhaustive audit up to this many levels")->capture_default_str();

  // orbit
  auto* orb = app.add_subcommand("orbit", "orbit and name of a point under the stage map");
  ConstructOptions o_opt;
  unsigned o_stage = 2;
  std::string o_x = "1/3";
  std::size_t o_n = 32;
  o_opt.add(orb);
  orb->add_option("--stage", o_stage)->capture_default_str();
  orb->add_option("--x", o_x, "start point p/q")->capture_default_str();
  orb->add_option("--n", o_n, "steps")->capture_default_str();

  // test
  auto* test = app.add_subcommand("test", "Solovay-style test reports");
  test->require_subcommand(1);
  std::string t_eps = "1/4", t_delta = "2", t_omega;
  std::size_t t_nmax = 20;
  for (auto name : {"lln", "lil", "combined"}) {
    auto* t = test->add_subcommand(name);
    t->add_option("--n-max", t_nmax, "last block reported")->capture_default_str();
    if (std::string(name) != "lil") t->add_option("--eps", t_eps)->capture_default_str();
    if (std::string(name) != "lln") t->add_option("--delta", t_delta)->capture_default_str();
    t->add_option("--omega", t_omega, "bits to run the test on");
  }

  // construct
  auto* cons = app.add_subcommand("construct", "build omega step by step");
  ConstructOptions c_opt;
  unsigned c_steps = 4;
  c_opt.add(cons);
  cons->add_option("--steps", c_steps, "number of odd/even steps")->capture_default_str();

  // compress
  auto* comp = app.add_subcommand("compress", "LZ78 ratio series");
  std::string z_input, z_bits;
  std::vector<std::size_t> z_points;
  comp->add_option("--input", z_input, "construct output directory (name.txt, checkpoints.csv)");
  comp->add_option("--bits", z_bits, "explicit bit string");
  comp->add_option("--checkpoints", z_points, "prefix lengths")->delimiter(',');

  // report
  auto* rep = app.add_subcommand("report", "summarise a construct run");
  std::string r_input;
  std::string r_margin_text = "1/20";
  rep->add_option("--input", r_input, "construct output directory")->required();
  rep->add_option("--margin", r_margin_text, "compression gap margin")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  std::string stage = "validate";
  try {
    if (*sched) {
      const Rational r = parse_r(s_r);
      json cfg = {{"r", s_r}, {"sigma", s_sigma}, {"count", s_count}, {"toy_h", s_toy}};
      HeightSchedule h;
      if (!s_toy.empty()) {
        try {
          h = toy_schedule(r, s_toy);
        } catch (const Error& e) {
          throw UsageError(e.what());
        }
      } else {
        const SigmaFn sigma = parse_sigma_arg(s_sigma);
        stage = "run";
        h = compute_schedule(sigma, r, s_count);
      }
      stage = "run";
      OutputSet o(out, "schedule", cfg);
      o.file("schedule.json") << schedule_json(h).dump(2) << "\n";
      o.commit();
      std::cout << schedule_json(h).dump() << "\n";
    } else if (*build) {
      ConstructionConfig cfg = b_opt.config();
      if (b_stage > cfg.stage_cap) throw UsageError("--stage beyond --stage-cap");
      stage = "run";
      json desc = b_opt.describe();
      desc["stage"] = b_stage;
      desc["audit_levels"] = b_limit;
      OutputSet o(out, "build", desc);
      Construction c(cfg);
      auto& os = o.file("stages.jsonl");
      for (unsigned s = 0; s <= b_stage; ++s) {
        const Stage& st = c.stage(s);
        const StageAudit a = audit_stage(c, s, b_limit);
        json j = {{"s", s},
                  {"mode", cfg.toy ? "toy" : "schedule"},
                  {"R", st.record.fold},
                  {"pi_columns", st.record.pi_columns},
                  {"delta_columns", st.record.delta_columns},
                  {"measure_pi", to_string(st.record.measure_pi)},
                  {"measure_delta", to_string(st.record.measure_delta)},
                  {"metric", to_string(st.record.metric)},
                  {"metric_decimal", to_decimal(st.record.metric, 6)},
                  {"metric_met", st.record.metric_met},
                  {"gamma", to_string(st.record.gamma)},
                  {"audit",
                   {{"ledger_ok", a.ledger_ok}, {"maps_ok", a.maps_ok}, {"tiles_ok", a.tiles_ok}, {"names_ok", a.names_ok},
                    {"exhaustive", a.exhaustive}, {"levels_checked", a.levels_checked}, {"detail", a.detail}}}};
        os << j.dump() << "\n";
        std::cout << "stage " << s << ": R=" << st.record.fold << " Pi columns=" << st.record.pi_columns
                  << " metric=" << to_decimal(st.record.metric, 4) << " audit="
                  << (a.ledger_ok && a.maps_ok && a.tiles_ok && a.names_ok ? "ok" : "FAILED") << "\n";
      }
      if (c.stage(b_stage).pi->size() <= 64) {
        Gadget g = materialize(*c.stage(b_stage).pi, b_stage);
        o.file("pi_stage" + std::to_string(b_stage) + ".json") << gadget_to_json(g).dump() << "\n";
      }
      o.commit();
    } else if (*orb) {
      ConstructionConfig cfg = o_opt.config();
      const Rational x = parse_arg("x", o_x);
      if (!(x >= 0 && x < 1)) throw UsageError("--x must lie in [0, 1)");
      if (o_stage > cfg.stage_cap) throw UsageError("--stage beyond --stage-cap");
      stage = "run";
      json desc = o_opt.describe();
      desc["stage"] = o_stage;
      desc["x"] = o_x;
      desc["n"] = o_n;
      OutputSet o(out, "orbit", desc);
      Construction c(cfg);
      TransformStage ts(explicit_stage(c, o_stage, 4000000), o_stage);
      const Orbit ob = orbit(ts, x, o_n, c.partition());
      write_orbit_csv(o.file("orbit.csv"), ob);
      o.commit();
      std::cout << "name " << ob.name.str() << " (defined for " << ob.defined_up_to << " steps)\n";
    } else if (*test) {
      const Rational eps = parse_arg("eps", t_eps), delta = parse_arg("delta", t_delta);
      BitString omega;
      if (!t_omega.empty()) try {
          omega = BitString(t_omega);
        } catch (const Error& e) {
          throw UsageError(e.what());
        }
      std::unique_ptr<SolovayTest> t;
      std::string which;
      stage = "run";
      if (test->got_subcommand("lln")) {
        which = "lln";
        t = lln_test(eps);
      } else if (test->got_subcommand("lil")) {
        which = "lil";
        t = lil_test(delta);
      } else {
        which = "combined";
        std::vector<std::unique_ptr<SolovayTest>> fam;
        fam.push_back(lln_test(eps));
        fam.push_back(lil_test(delta));
        t = combine_tests(std::move(fam));
      }
      OutputSet o(out, "test " + which, {{"eps", t_eps}, {"delta", t_delta}, {"n_max", t_nmax}, {"omega", t_omega}});
      json rep = test_report(*t, t_nmax);
      if (!t_omega.empty()) {
        const TestVerdict v = run_test(*t, omega, ratio(1, 1024));
        rep["verdict"] = {{"prefix_len", v.prefix_len}, {"hits", v.hits}, {"hit_lengths", v.hit_lengths},
                          {"tail_budget", to_string(v.tail_budget)}};
      }
      o.file(which + ".json") << rep.dump(2) << "\n";
      o.commit();
      std::cout << which << " report written for blocks up to " << t_nmax << "\n";
    } else if (*cons) {
      ConstructionConfig cfg = c_opt.config();
      if (c_steps == 0) throw UsageError("--steps must be positive");
      stage = "run";
      json desc = c_opt.describe();
      desc["steps"] = c_steps;
      OutputSet o(out, "construct", desc);
      Construction c(cfg);
      const BuildResult res = build_unstable(c, c_steps);
      write_construction_jsonl(o.file("construction.jsonl"), res, cfg);
      const SigmaFn sigma = cfg.sigma;
      write_trace_csv(o.file("trace.csv"), res.trace, [&](std::size_t j) { return static_cast<unsigned>(sigma(j)); });
      o.file("omega.txt") << res.omega.str() << "\n";
      o.file("name.txt") << res.name.str() << "\n";
      auto& cp = o.file("checkpoints.csv");
      cp << "k,parity,s,length,ones,ok\n";
      for (const auto& p : res.checkpoints)
        cp << p.k << "," << (p.odd ? "odd" : "even") << "," << p.s << "," << p.length << "," << p.ones << ","
           << (p.ok ? "true" : "false") << "\n";
      o.commit();
      std::cout << "omega " << res.omega.str() << "\nbudget " << (res.budget_ok ? "ok" : "VIOLATED") << ", checkpoints "
                << (res.checkpoints_ok ? "ok" : "FAILED") << "\n";
    } else if (*comp) {
      BitString x;
      std::vector<std::size_t> points = z_points;
      if (!z_input.empty()) {
        x = read_bits(fs::path(z_input) / "name.txt");
        if (points.empty()) points = read_checkpoint_lengths(fs::path(z_input) / "checkpoints.csv");
      } else if (!z_bits.empty()) {
        try {
          x = BitString(z_bits);
        } catch (const Error& e) {
          throw UsageError(e.what());
        }
        if (points.empty()) points = {x.size()};
      } else {
        throw UsageError("compress needs --input or --bits");
      }
      if (!std::is_sorted(points.begin(), points.end()) || (!points.empty() && points.back() > x.size()))
        throw UsageError("checkpoints must be increasing and at most the string length");
      stage = "run";
      OutputSet o(out, "compress", {{"input", z_input}, {"bits", z_bits}, {"checkpoints", points}});
      write_ratio_csv(o.file("ratios.csv"), x, points);
      o.commit();
      std::cout << "ratios at " << points.size() << " checkpoints written\n";
    } else if (*rep) {
      const Rational margin = parse_arg("margin", r_margin_text);
      const fs::path in(r_input);
      std::ifstream is(in / "construction.jsonl");
      if (!is) throw UsageError("cannot read " + (in / "construction.jsonl").string());
      stage = "run";
      json summary;
      std::vector<json> steps, stages;
      for (std::string line; std::getline(is, line);) {
        json j = json::parse(line);
        if (j["record"] == "summary") summary = j;
        else if (j["record"] == "step") steps.push_back(j);
        else stages.push_back(j);
      }
      if (summary.is_null()) throw Error(Module::cli, "bad_input", "construction.jsonl has no summary line");
      const BitString name(summary["name"].get<std::string>());
      std::vector<Checkpoint> cps;
      bool odd_ok = true, even_ok = true, metric_ok = true;
      for (const auto& st : steps) {
        Checkpoint cp;
        cp.odd = st["parity"] == "odd";
        cp.length = st["checkpoint"]["length"];
        cp.ones = st["checkpoint"]["ones"];
        cps.push_back(cp);
        (cp.odd ? odd_ok : even_ok) &= st["checkpoint"]["ok"].get<bool>();
      }
      for (const auto& st : stages)
        if (st["s"].get<unsigned>() > 0) metric_ok &= st["metric_met"].get<bool>();
      std::optional<Rational> lo_odd, hi_even;
      for (const auto& cp : cps) {
        const Rational v = ratio_series(name, {cp.length})[0];
        if (cp.odd) lo_odd = lo_odd ? std::min(*lo_odd, v) : v;
        else hi_even = hi_even ? std::max(*hi_even, v) : v;
      }
      json out_j = {{"mode", summary["mode"]},
                    {"steps", steps.size()},
                    {"budget_ok", summary["budget_ok"]},
                    {"checkpoints_ok", summary["checkpoints_ok"]},
                    {"odd_frequency_ok", odd_ok},
                    {"even_frequency_ok", even_ok},
                    {"well_distribution_ok", metric_ok},
                    {"margin", to_string(margin)}};
      if (lo_odd && hi_even) {
        const Rational gap = *hi_even - *lo_odd;
        out_j["compression_gap"] = to_string(gap);
        out_j["compression_gap_decimal"] = to_decimal(gap, 6);
        out_j["compression_gap_ok"] = gap >= margin;
      }
      OutputSet o(out, "report", {{"input", r_input}, {"margin", r_margin_text}});
      o.file("report.json") << out_j.dump(2) << "\n";
      o.commit();
      std::cout << out_j.dump(2) << "\n";
    }
  } catch (const UsageError& e) {
    std::cerr << "cli-harness/usage: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << e.qualified() << "\n";
    return stage == "validate" ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "cli-harness/internal: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
