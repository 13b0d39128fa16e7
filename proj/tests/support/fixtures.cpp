#include "fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <regex>
#include <stdexcept>

namespace talp::testing {
namespace fs = std::filesystem;

RegionMeasurement invert_region(const std::string& name, const ResourceConfig& config,
                                std::int64_t elapsed_ns, const EfficiencyTargets& eff,
                                const CounterTargets& counters) {
  const long double p = static_cast<long double>(config.total_cpus());
  const long double e = static_cast<long double>(elapsed_ns);
  const long double total = p * e;
  const long double non_mpi = eff.mpi_load_balance * eff.mpi_communication * total;
  const long double serialized = eff.omp_serialization * non_mpi;
  const long double scheduled = eff.omp_scheduling * serialized;
  const long double useful = eff.omp_load_balance * scheduled;

  RegionMeasurement r;
  r.name = name;
  r.elapsed_ns = elapsed_ns;
  r.useful_cpu_ns = std::llround(useful);
  r.mpi_cpu_ns = std::llround(total - non_mpi);
  r.omp_serialization_cpu_ns = std::llround(non_mpi - serialized);
  r.omp_scheduling_cpu_ns = std::llround(serialized - scheduled);
  // o_max = comm * E; then o_avg / o_max = (W / P) / (comm * E) = load balance.
  r.max_non_mpi_rank_ns = std::llround(eff.mpi_communication * e);
  r.cycles = std::llround(counters.frequency_ghz * useful);
  r.instructions = std::llround(counters.ipc * counters.frequency_ghz * useful);
  return r;
}

std::int64_t elapsed_for_instructions(double instructions, const ResourceConfig& config,
                                      const EfficiencyTargets& eff,
                                      const CounterTargets& counters) {
  const long double per_ns = static_cast<long double>(counters.ipc) * counters.frequency_ghz *
                             eff.parallel_efficiency() *
                             static_cast<long double>(config.total_cpus());
  return std::llround(instructions / per_ns);
}

OracleMetrics oracle_metrics(const RegionMeasurement& r, const ResourceConfig& c) {
  const long double p = static_cast<long double>(c.mpi_ranks) * c.omp_threads;
  const long double e = r.elapsed_ns;
  const long double t = p * e;
  const long double w = t - r.mpi_cpu_ns;
  const long double s = w - r.omp_serialization_cpu_ns;
  const long double q = s - r.omp_scheduling_cpu_ns;
  const long double u = r.useful_cpu_ns;
  const long double o_max = r.max_non_mpi_rank_ns;
  const long double o_avg = w / p;
  OracleMetrics m{};
  m.pe = u / t;
  m.mpi_comm = o_max / e;
  m.mpi_lb = o_avg / o_max;
  m.mpi_pe = w / t;
  m.omp_serial = s / w;
  m.omp_sched = q / s;
  m.omp_lb = u / q;
  m.omp_pe = u / w;
  m.ipc = static_cast<long double>(r.instructions) / r.cycles;
  m.freq = static_cast<long double>(r.cycles) / u;
  return m;
}

Timestamp ts(const char* text) {
  auto t = Timestamp::parse(text);
  if (!t) throw std::invalid_argument(std::string("bad timestamp in test: ") + text);
  return *t;
}

RunMeasurement make_run(const ResourceConfig& config, std::vector<RegionMeasurement> regions,
                        const char* run_timestamp) {
  RunMeasurement run;
  run.schema_version = 1;
  run.run_timestamp = ts(run_timestamp);
  run.resources = config;
  run.regions = std::move(regions);
  return run;
}

RegionMeasurement ideal_region(const std::string& name, const ResourceConfig& config,
                               std::int64_t elapsed_ns, std::int64_t instructions_per_cpu) {
  RegionMeasurement r;
  r.name = name;
  r.elapsed_ns = elapsed_ns;
  r.useful_cpu_ns = config.total_cpus() * elapsed_ns;
  r.max_non_mpi_rank_ns = elapsed_ns;
  r.instructions = instructions_per_cpu * config.total_cpus();
  r.cycles = r.instructions;
  return r;
}

ResourceConfig random_config(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> ranks(1, 64);
  std::uniform_int_distribution<int> threads(1, 112);
  std::bernoulli_distribution mpi_only(0.2);
  return ResourceConfig{ranks(rng), mpi_only(rng) ? 1 : threads(rng)};
}

RegionMeasurement random_valid_region(std::mt19937_64& rng, const ResourceConfig& config,
                                      const std::string& name) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::int64_t> elapsed(1'000'000, 10'000'000'000);
  const std::int64_t p = config.total_cpus();

  RegionMeasurement r;
  r.name = name;
  r.elapsed_ns = elapsed(rng);
  const std::int64_t total = p * r.elapsed_ns;
  r.mpi_cpu_ns = static_cast<std::int64_t>(0.6 * unit(rng) * static_cast<double>(total));
  const std::int64_t non_mpi = total - r.mpi_cpu_ns;
  const std::int64_t o_min = (non_mpi + p - 1) / p;
  r.max_non_mpi_rank_ns =
      o_min + static_cast<std::int64_t>(unit(rng) * static_cast<double>(r.elapsed_ns - o_min));
  if (config.omp_threads > 1) {
    r.omp_serialization_cpu_ns =
        static_cast<std::int64_t>(0.4 * unit(rng) * static_cast<double>(non_mpi));
    r.omp_scheduling_cpu_ns = static_cast<std::int64_t>(
        0.2 * unit(rng) * static_cast<double>(non_mpi - r.omp_serialization_cpu_ns));
  }
  const std::int64_t scheduled = non_mpi - r.omp_serialization_cpu_ns - r.omp_scheduling_cpu_ns;
  r.useful_cpu_ns = std::max<std::int64_t>(
      1, static_cast<std::int64_t>((0.05 + 0.95 * unit(rng)) * static_cast<double>(scheduled)));
  const double freq = 0.5 + 3.5 * unit(rng);
  const double ipc = 0.2 + 3.8 * unit(rng);
  r.cycles = std::max<std::int64_t>(1, std::llround(freq * static_cast<double>(r.useful_cpu_ns)));
  r.instructions = std::max<std::int64_t>(1, std::llround(ipc * static_cast<double>(r.cycles)));
  return r;
}

std::string git_hash(const std::string& prefix) {
  std::string h = prefix;
  h.resize(40, '0');
  return h;
}

void write_text(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

namespace {

RunMeasurement sample_run(const ResourceConfig& config, double instructions_per_cpu,
                           const EfficiencyTargets& eff, const char* run_ts) {
  const CounterTargets counters{1.4, 2.1};
  const double global_instr = instructions_per_cpu * static_cast<double>(config.total_cpus());
  const std::int64_t elapsed = elapsed_for_instructions(global_instr, config, eff, counters);
  std::vector<RegionMeasurement> regions;
  regions.push_back(invert_region("Global", config, elapsed, eff, counters));
  regions.push_back(invert_region("initialize", config, elapsed / 10, eff, counters));
  EfficiencyTargets step = eff;
  step.omp_serialization = std::min(1.0, eff.omp_serialization + 0.03);
  regions.push_back(invert_region("timestep", config, elapsed * 8 / 10, step, counters));
  return make_run(config, std::move(regions), run_ts);
}

}  // namespace

void write_sample_tree(const fs::path& root) {
  const EfficiencyTargets good{0.99, 0.98, 0.97, 0.99, 0.93};
  const EfficiencyTargets fair{0.95, 0.93, 0.94, 0.97, 0.85};

  const fs::path comparison = root / "mesh_1" / "comparison";
  write_text(comparison / "talp_1x112.json",
             serialize_run_measurement(sample_run({1, 112}, 4e10, fair, "2024-04-01T10:00:00Z")));
  write_text(comparison / "talp_2x56.json",
             serialize_run_measurement(sample_run({2, 56}, 4e10, good, "2024-04-01T11:00:00Z")));
  write_text(comparison / "talp_4x28.json",
             serialize_run_measurement(sample_run({4, 28}, 4e10, good, "2024-04-01T12:00:00Z")));

  const fs::path strong = root / "mesh_1" / "strong_scaling";
  write_text(strong / "talp_8x14.json",
             serialize_run_measurement(sample_run({8, 14}, 5e10, good, "2024-04-02T10:00:00Z")));
  write_text(strong / "talp_8x28.json",
             serialize_run_measurement(sample_run({8, 28}, 2.5e10, fair, "2024-04-02T11:00:00Z")));

  const fs::path weak = root / "mesh_2" / "weak_scaling";
  struct Commit {
    const char* short_hash;
    const char* commit_ts;
    const char* run_ts;
  };
  for (const Commit& c : {Commit{"9dc04ca", "2024-03-01T08:00:00+01:00", "2024-03-01T09:30:00Z"},
                          Commit{"ed8b9ef", "2024-03-08T08:00:00+01:00", "2024-03-08T09:30:00Z"}}) {
    for (const ResourceConfig& config : {ResourceConfig{8, 14}, ResourceConfig{8, 28}}) {
      RunMeasurement run = sample_run(config, 3e10, config.omp_threads == 14 ? good : fair, c.run_ts);
      run.git = GitMetadata{git_hash(c.short_hash), "main", ts(c.commit_ts)};
      write_text(weak / ("talp_" + config.label() + "_" + c.short_hash + ".json"),
                 serialize_run_measurement(run));
    }
  }
}

namespace {

constexpr std::int64_t kReferenceElapsedNs = 10'000'000'000;
const EfficiencyTargets kReferenceEff{0.998, 1.0, 0.988, 0.988, 0.938};
const CounterTargets kReferenceCounters{1.2, 2.0};

SourcedRun fixture_run(const ResourceConfig& config, std::int64_t elapsed,
                       const EfficiencyTargets& eff, const CounterTargets& counters,
                       const char* run_ts) {
  return {"talp_" + config.label() + ".json",
          make_run(config, {invert_region("Global", config, elapsed, eff, counters)}, run_ts)};
}

std::vector<SourcedRun> scaling_fixture(const ResourceConfig& target, const EfficiencyTargets& eff,
                                        const CounterTargets& counters,
                                        double instruction_scalability) {
  const ResourceConfig ref{2, 56};
  SourcedRun reference = fixture_run(ref, kReferenceElapsedNs, kReferenceEff, kReferenceCounters,
                                     "2024-05-01T10:00:00Z");
  const double n_ref = static_cast<double>(reference.run.regions.front().instructions);
  const std::int64_t elapsed =
      elapsed_for_instructions(n_ref / instruction_scalability, target, eff, counters);
  return {std::move(reference), fixture_run(target, elapsed, eff, counters, "2024-05-01T11:00:00Z")};
}

}  // namespace

std::vector<SourcedRun> strong_fixture() {
  const double c = 0.9695;
  return scaling_fixture({4, 56}, {c, 1.0, c, c, 0.6895}, {3.285 * 1.2, 0.881 * 2.0}, 0.99);
}

std::vector<SourcedRun> weak_fixture() {
  // Built like the strong case: total instructions grow by 1/0.493 from
  // 112 to 448 CPUs, which is what the target instruction scalability
  // implies under N_ref / N_t.
  return scaling_fixture({8, 56}, {0.992, 1.0, 0.982, 0.992, 0.902}, {1.2, 1.98}, 0.493);
}

TempDir::TempDir() {
  static std::mt19937_64 rng{std::random_device{}()};
  path_ = fs::temp_directory_path() / ("talp-test-" + std::to_string(rng()));
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

namespace {

std::string percent_decode(const std::string& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '%' && i + 2 < s.size()) {
      out += static_cast<char>(std::stoi(s.substr(i + 1, 2), nullptr, 16));
      i += 2;
    } else {
      out += s[i];
    }
  }
  return out;
}

}  // namespace

std::vector<std::string> dangling_links(const fs::path& root) {
  static const std::regex kLink(R"re((?:href|src)="([^"]*)")re");
  std::vector<std::string> missing;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".html") continue;
    const std::string html = read_text(entry.path());
    for (std::sregex_iterator it(html.begin(), html.end(), kLink), end; it != end; ++it) {
      const std::string target = (*it)[1];
      if (target.empty() || target.starts_with("http:") || target.starts_with("https:") ||
          target.starts_with("#") || target.starts_with("mailto:") || target.starts_with("data:")) {
        continue;
      }
      const fs::path resolved = entry.path().parent_path() / percent_decode(target);
      if (!fs::exists(resolved)) {
        missing.push_back(entry.path().lexically_relative(root).string() + " -> " + target);
      }
    }
  }
  return missing;
}

bool well_formed_xml(const std::string& text, std::string* why) {
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  std::vector<std::string> stack;
  int roots = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] != '<') {
      if (stack.empty() && !std::isspace(static_cast<unsigned char>(text[i]))) {
        return fail("text outside the root element");
      }
      if (text[i] == '&') {
        const std::size_t semi = text.find(';', i);
        if (semi == std::string::npos || semi - i > 8) return fail("bad entity");
      }
      ++i;
      continue;
    }
    if (text.compare(i, 4, "<!--") == 0) {
      const std::size_t end = text.find("-->", i);
      if (end == std::string::npos) return fail("unterminated comment");
      i = end + 3;
      continue;
    }
    if (text.compare(i, 2, "<?") == 0) {
      const std::size_t end = text.find("?>", i);
      if (end == std::string::npos) return fail("unterminated declaration");
      i = end + 2;
      continue;
    }
    const bool closing = i + 1 < text.size() && text[i + 1] == '/';
    std::size_t j = i + (closing ? 2 : 1);
    std::string name;
    while (j < text.size() && (std::isalnum(static_cast<unsigned char>(text[j])) ||
                               text[j] == '-' || text[j] == ':' || text[j] == '_')) {
      name += text[j++];
    }
    if (name.empty()) return fail("empty tag name");
    if (closing) {
      while (j < text.size() && std::isspace(static_cast<unsigned char>(text[j]))) ++j;
      if (j >= text.size() || text[j] != '>') return fail("bad closing tag");
      if (stack.empty() || stack.back() != name) return fail("mismatched </" + name + ">");
      stack.pop_back();
      i = j + 1;
      continue;
    }
    // attributes
    bool self_closing = false;
    while (true) {
      while (j < text.size() && std::isspace(static_cast<unsigned char>(text[j]))) ++j;
      if (j >= text.size()) return fail("unterminated tag");
      if (text[j] == '>') break;
      if (text.compare(j, 2, "/>") == 0) {
        self_closing = true;
        ++j;
        break;
      }
      std::string attr;
      while (j < text.size() && text[j] != '=' && !std::isspace(static_cast<unsigned char>(text[j])) &&
             text[j] != '>') {
        attr += text[j++];
      }
      if (attr.empty() || j >= text.size() || text[j] != '=') return fail("attribute without value");
      ++j;
      if (j >= text.size() || (text[j] != '"' && text[j] != '\'')) return fail("unquoted attribute");
      const char quote = text[j];
      const std::size_t end = text.find(quote, j + 1);
      if (end == std::string::npos) return fail("unterminated attribute");
      if (text.substr(j + 1, end - j - 1).find('<') != std::string::npos) return fail("'<' in attribute");
      j = end + 1;
    }
    if (stack.empty()) ++roots;
    if (!self_closing) stack.push_back(name);
    i = j + 1;
  }
  if (!stack.empty()) return fail("unclosed <" + stack.back() + ">");
  if (roots != 1) return fail("expected exactly one root element");
  return true;
}

std::string extract_data_island(const std::string& html) {
  const std::string open = R"(<script type="application/json" id="talp-data">)";
  const std::size_t start = html.find(open);
  if (start == std::string::npos) return {};
  const std::size_t body = start + open.size();
  const std::size_t end = html.find("</script>", body);
  if (end == std::string::npos) return {};
  return html.substr(body, end - body);
}

std::vector<std::pair<std::string, std::string>> snapshot(const fs::path& root) {
  std::vector<std::pair<std::string, std::string>> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file()) {
      files.emplace_back(entry.path().lexically_relative(root).generic_string(),
                         read_text(entry.path()));
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace talp::testing
