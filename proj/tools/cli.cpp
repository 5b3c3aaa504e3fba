#include "cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "addrhop/analysis.hpp"
#include "addrhop/chaos_hash.hpp"
#include "addrhop/kv.hpp"
#include "addrhop/sim.hpp"
#include "addrhop/timesync.hpp"
#include "addrhop/tracking.hpp"

namespace addrhop::cli {
namespace {

constexpr std::string_view kManifestMagic = "# addrhop ";

// A config file is either plain key=value lines or an earlier output of this
// tool, in which case its manifest header is replayed.
KeyValues load_config(const std::string& path, const std::string& command) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  if (!text.starts_with(kManifestMagic)) return parse_kv(text);

  std::string header;
  std::istringstream lines(text);
  std::string line;
  std::getline(lines, line);
  while (std::getline(lines, line) && line.starts_with("# ")) header += line.substr(2) + '\n';
  KeyValues kv = parse_kv(header);
  const auto it = kv.find("command");
  if (it == kv.end() || it->second != command)
    throw std::invalid_argument("manifest in '" + path + "' is not for " + command);
  kv.erase(it);
  kv.erase("config");
  return kv;
}

// One subcommand: its keys with defaults, and the values given on the command line.
struct Command {
  CLI::App* app = nullptr;
  KeyValues defaults;
  std::map<std::string, std::string> given;
  std::map<std::string, bool> switches;
  std::string config_path;

  void option(const std::string& key, std::string def, const std::string& help) {
    std::string flag = "--" + key;
    for (char& c : flag)
      if (c == '_') c = '-';
    defaults[key] = std::move(def);
    app->add_option(flag, given[key], defaults[key].empty() ? help : help + " (default: " + defaults[key] + ")");
  }

  void flag(const std::string& key, const std::string& help) {
    std::string name = "--" + key;
    for (char& c : name)
      if (c == '_') c = '-';
    defaults[key] = "false";
    app->add_flag(name, switches[key], help);
  }

  // defaults < config file < flags
  KeyValues resolve() const {
    KeyValues kv = defaults;
    if (!config_path.empty()) {
      for (const auto& [k, v] : load_config(config_path, app->get_name())) {
        if (!defaults.contains(k)) throw std::invalid_argument("config key '" + k + "' does not apply to " + app->get_name());
        kv[k] = v;
      }
    }
    for (const auto& [k, v] : given)
      if (app->get_option("--" + dashed(k))->count() > 0) kv[k] = v;
    for (const auto& [k, on] : switches)
      if (on) kv[k] = "true";
    return kv;
  }

  static std::string dashed(std::string key) {
    for (char& c : key)
      if (c == '_') c = '-';
    return key;
  }
};

void write_manifest(std::ostream& os, const std::string& name, const KeyValues& kv, const std::string& config_path) {
  os << "# addrhop " << kVersion << '\n';
  os << "# command=" << name << '\n';
  os << "# config=" << (config_path.empty() ? "-" : config_path) << '\n';
  for (const auto& [k, v] : kv) os << "# " << k << '=' << v << '\n';
}

bool flag_set(const KeyValues& kv, std::string_view key) { return require(kv, key) == "true"; }

std::vector<std::uint64_t> parse_u64_list(std::string_view text) {
  std::vector<std::uint64_t> out;
  while (true) {
    const auto comma = text.find(',');
    out.push_back(parse_u64(text.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    text = text.substr(comma + 1);
  }
  return out;
}

HashParams hash_from(const KeyValues& kv) {
  HashParams h;
  h.l = static_cast<unsigned>(parse_u64(require(kv, "l")));
  h.n = static_cast<unsigned>(parse_u64(require(kv, "n")));
  h.s0 = Fraction::from_raw(parse_hex64(require(kv, "s0_hex")));
  h.t0 = Fraction::from_raw(parse_hex64(require(kv, "t0_hex")));
  h.validate();
  return h;
}

void add_hash_options(Command& c) {
  c.option("l", "16", "tent-map hash block size in bits");
  c.option("n", "75", "tent-map rounds per block");
  c.option("s0_hex", hex64(kDefaultS0.raw()), "initial s fraction as 64-bit hex");
  c.option("t0_hex", hex64(kDefaultT0.raw()), "initial t fraction as 64-bit hex");
}

std::string fmt(double v) { return format_double(v); }
std::string fmt_opt(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

// Subcommand bodies ------------------------------------------------------------

void cmd_tf(const KeyValues& kv, std::ostream& os) {
  TFParams p;
  p.hash = hash_from(kv);
  p.subnet = SubnetSpec::parse(require(kv, "subnet"));
  p.validate();
  const unsigned x = p.host_bits();
  const std::uint64_t start = parse_u64(require(kv, "start"));
  const std::uint64_t count = parse_u64(require(kv, "count"));
  os << "timestamp,host_id_bin,host_id_dec,address\n";
  for (std::uint64_t i = 0; i < count; ++i) {
    const Timestamp ts = start + i;
    const Address a = address_at(p, ts);
    const std::uint64_t host = a.low_bits(x);
    std::string bin(x, '0');
    for (unsigned b = 0; b < x; ++b)
      if ((host >> b) & 1) bin[x - 1 - b] = '1';
    os << ts << ',' << bin << ',' << host << ',' << a.to_string() << '\n';
  }
}

void cmd_hash(const KeyValues& kv, std::ostream& os) {
  const HashParams h = hash_from(kv);
  const std::string& message = require(kv, "message");
  os << "input,digest_hex,digest_bin\n";
  if (!message.empty()) {
    const std::vector<std::uint8_t> bytes(message.begin(), message.end());
    const Digest d = digest(bytes, h);
    os << message << ',' << d.to_hex() << ',' << d.to_binary() << '\n';
    return;
  }
  const std::uint64_t ts = parse_u64(require(kv, "timestamp"));
  const Digest d = digest_timestamp(ts, h);
  os << ts << ',' << d.to_hex() << ',' << d.to_binary() << '\n';
}

void cmd_collision(const KeyValues& kv, std::ostream& os) {
  const auto ms = parse_u64_list(require(kv, "m"));
  const auto ks = parse_u64_list(require(kv, "k"));
  const auto hs = parse_u64_list(require(kv, "h"));
  const std::uint64_t trials = parse_u64(require(kv, "trials"));
  const std::uint64_t seed = parse_u64(require(kv, "seed"));
  if (trials == 0) throw std::invalid_argument("--trials must be positive");
  os << "m,k,h,p_analytic,p_mc,trials,seed\n";
  for (std::uint64_t h : hs) {
    for (std::uint64_t k : ks) {
      for (std::uint64_t m : ms) {
        const CollisionScenario sc{m, k, h};
        os << m << ',' << k << ',' << h << ',';
        if (k < 1 || m == 0 || h + k > m) {
          os << "NA,NA," << trials << ',' << seed << '\n';
          continue;
        }
        const std::uint64_t cell_seed = derive_seed(seed, m * 1000003 + k * 1009 + h, 0);
        os << fmt(collision_prob(sc)) << ',' << fmt(collision_mc(sc, trials, cell_seed)) << ',' << trials << ','
           << seed << '\n';
      }
    }
  }
}

const char* const kLossOnlyKeys[] = {"zetas", "lambdas", "replications", "couple_lambda", "floor", "analytic", "trace"};

SimConfig sim_config_from(const KeyValues& kv) {
  KeyValues sim_keys = kv;
  for (const char* k : kLossOnlyKeys) sim_keys.erase(k);
  SimConfig c;
  c.apply(sim_keys);
  return c;
}

void cmd_loss(const KeyValues& kv, std::ostream& os) {
  const SimConfig base = sim_config_from(kv);
  const auto lambdas = parse_double_list(require(kv, "lambdas"));
  const std::uint64_t replications = parse_u64(require(kv, "replications"));
  const std::string& couple = require(kv, "couple_lambda");

  if (const std::string& trace_path = require(kv, "trace"); !trace_path.empty()) {
    std::ofstream trace(trace_path, std::ios::binary);
    if (!trace) throw std::runtime_error("cannot write trace file '" + trace_path + "'");
    run(base, &trace);
  }

  if (!couple.empty()) {
    std::string zs = require(kv, "zetas");
    if (zs.empty()) zs = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1,1.1,1.2,1.3,1.4,1.5,1.6,1.7,1.8,1.9,2";
    const auto zetas = parse_double_list(zs);
    const double floor = parse_double(require(kv, "floor"));
    if (replications < 1) throw std::invalid_argument("--replications must be positive");
    const ThresholdScan scan = threshold_scan(base, zetas, parse_double(couple), floor, replications);
    os << "zeta,lambda,mean_loss\n";
    for (const ThresholdPoint& p : scan.curve) os << fmt(p.zeta) << ',' << fmt(p.lambda) << ',' << fmt(p.mean_loss) << '\n';
    os << "# knee_zeta=" << (scan.knee ? fmt(*scan.knee) : std::string("none")) << '\n';
    return;
  }

  std::string zs = require(kv, "zetas");
  if (zs.empty()) zs = "1,2,3,4,8";
  const auto zetas = parse_double_list(zs);

  if (flag_set(kv, "analytic")) {
    const double d = base.delay.mean();
    os << "zeta,lambda,d_model,loss_analytic\n";
    for (double z : zetas) {
      for (double l : lambdas) {
        os << fmt(z) << ',' << fmt(l) << ',' << fmt(d) << ',';
        if (d - l >= z || !(l < z)) os << "NA\n";
        else os << fmt(expected_loss({d, l, z})) << '\n';
      }
    }
    return;
  }

  if (replications < 1) throw std::invalid_argument("--replications must be positive");
  os << "zeta,lambda,replications,mean,ci_low,ci_high,min,max\n";
  std::vector<SweepCell> cells;
  if (replications == 1) {
    // A single replication has no interval; run the grid directly.
    for (double z : zetas) {
      for (double l : lambdas) {
        SimConfig c = base;
        c.zeta = z;
        c.lambda = l;
        c.duration = z * std::max(1.0, std::round(base.duration / z));
        c.seed = derive_seed(base.seed, 0, 7);
        const double loss = run(c).loss_fraction();
        cells.push_back({z, l, 1, summarize(std::span<const double>(&loss, 1))});
      }
    }
  } else {
    cells = sweep(base, zetas, lambdas, replications);
  }
  for (const SweepCell& c : cells)
    os << fmt(c.zeta) << ',' << fmt(c.lambda) << ',' << c.replications << ',' << fmt(c.loss.mean) << ','
       << fmt_opt(c.loss.ci95_low) << ',' << fmt_opt(c.loss.ci95_high) << ',' << fmt(c.loss.min) << ','
       << fmt(c.loss.max) << '\n';
}

void cmd_autocorr(const KeyValues& kv, std::ostream& os) {
  const HashParams h = hash_from(kv);
  const auto x = static_cast<unsigned>(parse_u64(require(kv, "x")));
  const std::uint64_t samples = parse_u64(require(kv, "samples"));
  const auto max_lag = static_cast<unsigned>(parse_u64(require(kv, "max_lag")));
  const std::uint64_t start = parse_u64(require(kv, "start"));
  const WhitenessReport r = whiteness_report(h, x, samples, max_lag, start);

  os << "lag,rho,band,pass\n";
  for (std::size_t k = 0; k < r.autocorrelation.size(); ++k) {
    const bool pass = k == 0 || std::abs(r.autocorrelation[k]) < r.band;
    os << k << ',' << fmt(r.autocorrelation[k]) << ',' << fmt(r.band) << ',' << (pass ? "PASS" : "FAIL") << '\n';
  }
  const bool chi_pass = r.chi_square_p > 1e-3;
  os << "# chi_square=" << fmt(r.chi_square) << " bins=" << r.bins << " p=" << fmt(r.chi_square_p)
     << " uniformity=" << (chi_pass ? "PASS" : "FAIL") << '\n';
  os << "# whiteness=" << (r.lags_within_band() ? "PASS" : "FAIL") << '\n';
}

void cmd_sync(const KeyValues& kv, std::ostream& os) {
  const double delta = parse_double(require(kv, "delta"));
  if (!(delta > 0.0)) throw std::invalid_argument("--delta must be positive");
  const double zeta = parse_double(require(kv, "zeta"));
  if (!(zeta > 0.0)) throw std::invalid_argument("--zeta must be positive");
  const std::int64_t bound = max_eta(delta);
  const std::string& eta_text = require(kv, "eta");
  const std::int64_t eta = eta_text.empty() ? std::max<std::int64_t>(bound, 1) : static_cast<std::int64_t>(parse_u64(eta_text));
  if (eta < 1) throw std::invalid_argument("--eta must be positive");
  const auto horizon = static_cast<std::int64_t>(parse_u64(require(kv, "horizon")));
  const std::vector<DriftClock> clocks{{delta, 0.0}, {-delta, 0.0}};
  const SyncPolicy policy = SyncPolicy::for_hops(zeta, eta);
  const bool agree = agreement_check(clocks, policy, zeta, horizon);
  os << "delta,eta_bound,eta,tau,worst_skew,within_bound,agreement\n";
  os << fmt(delta) << ',' << bound << ',' << eta << ',' << fmt(policy.tau) << ',' << fmt(worst_skew(delta, static_cast<double>(eta)))
     << ',' << (policy.satisfies_bound(delta) ? "yes" : "no") << ',' << (agree ? "PASS" : "FAIL") << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"IP-address hopping: tracking function, analysis and simulation", "addrhop"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  std::map<std::string, Command> commands;
  std::map<std::string, std::function<void(const KeyValues&, std::ostream&)>> bodies;
  std::string out_path;
  std::string format = "csv";

  auto make = [&](const std::string& name, const std::string& help) -> Command& {
    Command& c = commands[name];
    c.app = app.add_subcommand(name, help);
    c.app->set_help_flag("--help", "print this help message and exit");
    c.app->add_option("--config", c.config_path, "key=value file, or an earlier output whose manifest is replayed");
    c.app->add_option("--out", out_path, "output file (default: standard output)");
    c.app->add_option("--format", format, "output format (csv)");
    c.option("seed", "1", "random seed");
    return c;
  };

  {
    Command& c = make("tf", "print the tracking-function address sequence");
    c.option("subnet", "129.110.242.0/24", "subnet of the hopping node");
    c.option("start", "3000000", "first timestamp");
    c.option("count", "6", "number of timestamps");
    add_hash_options(c);
    bodies["tf"] = cmd_tf;
  }
  {
    Command& c = make("hash", "tent-map digest of a timestamp or message");
    c.option("timestamp", "3000000", "timestamp to hash (64-bit big-endian)");
    c.option("message", "", "text message to hash instead of a timestamp");
    add_hash_options(c);
    bodies["hash"] = cmd_hash;
  }
  {
    Command& c = make("collision", "address collision probability, analytic and Monte Carlo");
    c.option("m", "8,16,32,64,128,256", "subnet sizes");
    c.option("k", "1,2,3,4,5", "hopping node counts");
    c.option("h", "0,5", "static node counts");
    c.option("trials", "100000", "Monte Carlo trials per point");
    bodies["collision"] = cmd_collision;
  }
  {
    Command& c = make("loss", "packet loss sweep over zeta and lambda");
    for (const auto& [k, v] : SimConfig{}.to_kv())
      if (k != "seed") c.option(k, v, "simulation parameter " + k);
    c.option("zetas", "", "hop periods (default 1,2,3,4,8; 0.1..2.0 with --couple-lambda)");
    c.option("lambdas", "0.3,0.8", "retention windows");
    c.option("replications", "10", "runs per cell");
    c.option("couple_lambda", "", "scan zeta with lambda = c * zeta");
    c.option("floor", "0.01", "loss floor defining the threshold knee");
    c.option("trace", "", "write the event trace of one run of the base configuration");
    c.flag("analytic", "emit the closed-form loss model instead of simulating");
    bodies["loss"] = cmd_loss;
  }
  {
    Command& c = make("autocorr", "autocorrelation and uniformity of the host-id sequence");
    c.option("x", "8", "host bits");
    c.option("samples", "100000", "consecutive timestamps");
    c.option("max_lag", "100", "largest lag");
    c.option("start", "3000000", "first timestamp");
    add_hash_options(c);
    bodies["autocorr"] = cmd_autocorr;
  }
  {
    Command& c = make("sync-check", "drift bound and timestamp agreement check");
    c.option("delta", "1e-6", "maximum drift rate");
    c.option("eta", "", "hops per sync period (default: the largest safe value)");
    c.option("zeta", "1", "hop period in seconds");
    c.option("horizon", "10", "sync periods to simulate");
    bodies["sync-check"] = cmd_sync;
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kOk;
  } catch (const CLI::CallForVersion& e) {
    app.exit(e, out, err);
    return kOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsageError;
  }

  for (auto& [name, cmd] : commands) {
    if (!cmd.app->parsed()) continue;
    KeyValues kv;
    try {
      if (format != "csv") throw std::invalid_argument("unsupported --format '" + format + "' (only csv)");
      kv = cmd.resolve();
    } catch (const std::runtime_error& e) {  // unreadable config file
      err << "addrhop " << name << ": " << e.what() << '\n';
      return kRuntimeError;
    } catch (const std::exception& e) {
      err << "addrhop " << name << ": " << e.what() << '\n';
      return kUsageError;
    }

    std::ostringstream body;
    try {
      write_manifest(body, name, kv, cmd.config_path);
      bodies.at(name)(kv, body);
    } catch (const std::invalid_argument& e) {
      err << "addrhop " << name << ": " << e.what() << '\n';
      return kUsageError;
    } catch (const std::exception& e) {
      err << "addrhop " << name << ": " << e.what() << '\n';
      return kRuntimeError;
    }

    if (out_path.empty()) {
      out << body.str();
    } else {
      std::ofstream file(out_path, std::ios::binary);
      if (!file || !(file << body.str())) {
        err << "addrhop: cannot write '" << out_path << "'\n";
        return kRuntimeError;
      }
    }
    return kOk;
  }
  return kUsageError;
}

}  // namespace addrhop::cli
