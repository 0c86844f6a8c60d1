#include "gridtune/checkpoint.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "gridtune/errors.hpp"

namespace gridtune {

namespace {

constexpr int kVersion = 1;

std::string fmt_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

[[noreturn]] void bad(const std::string& path, const std::string& why) {
  throw ConfigError("checkpoint " + path + ": " + why);
}

}  // namespace

void save_checkpoint(const std::string& path, Agent& agent,
                     const AdamState& adam, const TrainProgress& progress) {
  std::vector<ParamBlock> blocks = agent.param_blocks();
  const bool have_moments = adam.initialized();
  if (have_moments && adam.m.size() != blocks.size())
    throw UsageError("save_checkpoint: optimizer state does not match agent");

  std::ostringstream out;
  out << "gridtune-checkpoint " << kVersion << "\n";
  out << "variant " << variant_name(agent.variant()) << "\n";
  if (agent.variant() == Variant::fixed_gain) {
    auto& fixed = dynamic_cast<FixedGainAgent&>(agent);
    out << "meta omega_l " << fmt_double(fixed.omega_l()) << "\n";
  } else {
    out << "meta kp_max " << fmt_double(agent.bound(0).hi) << "\n";
    out << "meta ki_max " << fmt_double(agent.bound(1).hi) << "\n";
  }
  out << "progress " << progress.iteration << " " << progress.total_iterations
      << " " << progress.env_steps << "\n";
  out << "adam_t " << (have_moments ? adam.t : 0) << "\n";
  out << "blocks " << blocks.size() << "\n";
  for (size_t b = 0; b < blocks.size(); ++b) {
    const ParamBlock& blk = blocks[b];
    out << "block " << blk.name << " " << blk.n << "\n";
    for (long i = 0; i < blk.n; ++i) {
      const size_t ui = static_cast<size_t>(i);
      const double mi = have_moments ? adam.m[b][ui] : 0.0;
      const double vi = have_moments ? adam.v[b][ui] : 0.0;
      out << fmt_double(blk.w[i]) << " " << fmt_double(mi) << " "
          << fmt_double(vi) << "\n";
    }
  }
  out << "end\n";

  std::ofstream f(path, std::ios::binary);
  if (!f) throw RuntimeFault("save_checkpoint: cannot write " + path);
  f << out.str();
  f.flush();
  if (!f) throw RuntimeFault("save_checkpoint: write failed for " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) bad(path, "cannot open");
  std::string word;

  auto expect = [&](const char* tag) {
    if (!(f >> word) || word != tag) bad(path, std::string("expected '") + tag + "'");
  };

  expect("gridtune-checkpoint");
  int version = 0;
  if (!(f >> version)) bad(path, "missing version");
  if (version != kVersion)
    bad(path, "unsupported version " + std::to_string(version));

  expect("variant");
  if (!(f >> word)) bad(path, "missing variant");
  const Variant variant = parse_variant(word);

  double omega_l = 0.0, kp_max = 0.0, ki_max = 0.0;
  if (variant == Variant::fixed_gain) {
    expect("meta");
    expect("omega_l");
    if (!(f >> omega_l)) bad(path, "missing omega_l");
  } else {
    expect("meta");
    expect("kp_max");
    if (!(f >> kp_max)) bad(path, "missing kp_max");
    expect("meta");
    expect("ki_max");
    if (!(f >> ki_max)) bad(path, "missing ki_max");
  }

  LoadedCheckpoint loaded;
  expect("progress");
  if (!(f >> loaded.progress.iteration >> loaded.progress.total_iterations >>
        loaded.progress.env_steps))
    bad(path, "malformed progress line");

  expect("adam_t");
  long adam_t = 0;
  if (!(f >> adam_t)) bad(path, "malformed adam_t line");

  expect("blocks");
  size_t n_blocks = 0;
  if (!(f >> n_blocks)) bad(path, "malformed blocks line");

  if (variant == Variant::fixed_gain)
    loaded.agent = std::make_unique<FixedGainAgent>(omega_l, 0);
  else
    loaded.agent = std::make_unique<AdaptiveGainAgent>(kp_max, ki_max, 0);

  std::vector<ParamBlock> blocks = loaded.agent->param_blocks();
  if (blocks.size() != n_blocks)
    bad(path, "block count does not match the " + std::string(variant_name(variant)) +
                  " layout");
  loaded.adam.init(blocks);
  loaded.adam.t = adam_t;

  for (size_t b = 0; b < n_blocks; ++b) {
    expect("block");
    std::string name;
    long n = 0;
    if (!(f >> name >> n)) bad(path, "malformed block header");
    if (name != blocks[b].name || n != blocks[b].n)
      bad(path, "block '" + name + "' does not match expected '" +
                    blocks[b].name + "'");
    for (long i = 0; i < n; ++i) {
      const size_t ui = static_cast<size_t>(i);
      if (!(f >> blocks[b].w[i] >> loaded.adam.m[b][ui] >> loaded.adam.v[b][ui]))
        bad(path, "truncated values in block '" + name + "'");
    }
  }
  expect("end");
  return loaded;
}

PiGains export_gains(const Agent& agent) {
  const auto gains = agent.exported_gains();
  if (!gains)
    throw UsageError("export_gains: only fixed-gain models resolve to controller gains");
  return *gains;
}

}  // namespace gridtune
