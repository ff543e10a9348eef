// Copyright 2026 The CLDG Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// The `cldg` command line. Kept in a header so tests can drive it in-process.
//
// Exit codes: 0 ok, 1 usage or config error, 2 data error, 3 numeric failure.

#ifndef CLDG_TOOLS_CLI_HPP_
#define CLDG_TOOLS_CLI_HPP_

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cldg/cldg.hpp"

namespace cldg::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

namespace detail {

namespace fs = std::filesystem;

struct FeatureFlags {
  std::string policy = "degree";
  std::size_t dim = 32;
  std::uint64_t seed = 0;

  FeatureSynthesis synthesis() const {
    return {policy == "random" ? FeaturePolicy::kSeededRandom
                               : FeaturePolicy::kDegreeBucket,
            dim, seed};
  }
};

inline void add_feature_flags(CLI::App* app, FeatureFlags& f) {
  app->add_option("--feature-policy", f.policy,
                  "features to synthesize when no features file is given")
      ->check(CLI::IsMember({"degree", "random"}));
  app->add_option("--feature-dim", f.dim, "synthesized feature dimension")
      ->check(CLI::PositiveNumber);
  app->add_option("--feature-seed", f.seed, "seed for random features");
}

inline void add_threads_flag(CLI::App* app, std::size_t& threads) {
  app->add_option("--threads", threads, "kernel threads")
      ->check(CLI::PositiveNumber);
}

inline void write_resolved(const CLI::App* app, const fs::path& path) {
  write_file_atomic(path, std::string("# cldg ") + CLDG_VERSION + "\n" +
                                  app->config_to_str(true, false));
}

inline fs::path sibling(const fs::path& out, const std::string& suffix) {
  fs::path p = out;
  p += suffix;
  return p;
}

inline void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

inline std::string format_windows(std::size_t epoch,
                                  const std::vector<ViewWindow>& windows) {
  std::ostringstream os;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    os << epoch << ',' << i + 1 << ',' << io::format_double(windows[i].lo) << ','
       << io::format_double(windows[i].hi) << '\n';
  }
  return os.str();
}

template <Real T>
void write_embeddings(const TemporalGraph& g, const std::string& ckpt_bytes,
                      Activation act, const fs::path& out) {
  auto params = deserialize_params<T>(ckpt_bytes);
  if (params.dims().d_in != g.feature_dim()) {
    throw ShapeError("checkpoint expects d_in=" +
                     std::to_string(params.dims().d_in) + " but features have " +
                     std::to_string(g.feature_dim()) + " columns");
  }
  auto h = embed_all<T>(g, params, act);
  write_file_atomic(out, format_node_table<T>(g.node_ids(), h));
}

/// Replaces `--config FILE` with the file's entries, placed right after the
/// subcommand name so explicit flags (parsed later) take precedence.
/// Returns arguments in the reversed order CLI::App::parse expects.
inline std::vector<std::string> expand_config(int argc, const char* const* argv) {
  std::vector<std::string> in(argv + std::min(argc, 1), argv + argc);
  std::optional<std::string> file;
  std::vector<std::string> rest;
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (in[i] == "--config") {
      if (i + 1 >= in.size()) throw ConfigError("--config needs a file");
      file = in[++i];
    } else if (in[i].rfind("--config=", 0) == 0) {
      file = in[i].substr(9);
    } else {
      rest.push_back(in[i]);
    }
  }
  if (file) {
    std::ifstream f(*file);
    if (!f) throw ConfigError("cannot open config file " + *file);
    std::vector<std::string> injected;
    for (const auto& item : CLI::ConfigBase().from_config(f)) {
      if (!item.parents.empty() && item.parents != std::vector<std::string>{"default"}) {
        throw ConfigError("config sections are not supported: " + item.fullname());
      }
      // Empty values are unset optional paths.
      if (item.inputs.size() == 1 && item.inputs[0].empty()) continue;
      std::string arg = "--" + item.name;
      for (std::size_t k = 0; k < item.inputs.size(); ++k) {
        arg += (k ? "," : "=") + item.inputs[k];
      }
      injected.push_back(arg);
    }
    // rest[0] is the subcommand when one was given.
    const auto at = rest.empty() || rest[0].rfind('-', 0) == 0 ? rest.begin()
                                                                : rest.begin() + 1;
    rest.insert(at, injected.begin(), injected.end());
  }
  std::reverse(rest.begin(), rest.end());
  return rest;
}

}  // namespace detail

/// Parses argv and runs one subcommand.
inline int run_cli(int argc, const char* const* argv,
                   std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  using detail::FeatureFlags;
  namespace fs = std::filesystem;

  CLI::App app{"Contrastive learning on dynamic graphs", "cldg"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  app.set_version_flag("--version", std::string(CLDG_VERSION));
  std::function<void()> action;

  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  std::string config_path;  // consumed by expand_config; listed for --help
  auto subcommand = [&](const std::string& name, const std::string& desc) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("--config", config_path,
                    "flat key=value file mirroring flag names")
        ->configurable(false);
    return sub;
  };

  std::size_t threads = 1;

  // sample-views
  CLI::App* sv = subcommand("sample-views", "print sampled view windows");
  SamplerConfig sv_cfg;
  std::string sv_strategy = "sequential";
  std::size_t sv_epochs = 1;
  std::string sv_edges;
  double sv_tmin = 0.0;
  double sv_tmax = 0.0;
  std::string sv_out;
  sv->add_option("--strategy", sv_strategy)
      ->check(CLI::IsMember({"sequential", "high", "low", "random"}));
  sv->add_option("--s", sv_cfg.s, "timespan factor")->check(CLI::PositiveNumber);
  sv->add_option("--v", sv_cfg.v, "views per epoch");
  sv->add_option("--seed", sv_cfg.seed);
  sv->add_option("--epochs", sv_epochs)->check(CLI::PositiveNumber);
  auto* sv_edges_opt = sv->add_option("--edges", sv_edges, "edge list")
                           ;
  auto* sv_tmin_opt = sv->add_option("--t-min", sv_tmin);
  auto* sv_tmax_opt = sv->add_option("--t-max", sv_tmax);
  sv_tmin_opt->needs(sv_tmax_opt)->excludes(sv_edges_opt);
  sv_tmax_opt->needs(sv_tmin_opt)->excludes(sv_edges_opt);
  sv->add_option("--out", sv_out, "output file (default: stdout)");
  detail::add_threads_flag(sv, threads);
  sv->callback([&] {
    action = [&] {
      sv_cfg.strategy = parse_strategy(sv_strategy);
      sv_cfg.validate();
      std::string text;
      if (!sv_edges.empty()) {
        auto g = load_temporal_graph(sv_edges);
        for (std::size_t e = 0; e < sv_epochs; ++e) {
          text += detail::format_windows(e + 1, sample_views(g, sv_cfg, e).windows);
        }
      } else if (sv_tmin_opt->count() > 0) {
        if (!(sv_tmax > sv_tmin)) throw ConfigError("need --t-max > --t-min");
        for (std::size_t e = 0; e < sv_epochs; ++e) {
          text += detail::format_windows(
              e + 1, sample_windows(sv_tmin, sv_tmax, sv_cfg, e));
        }
      } else {
        throw ConfigError("sample-views needs --edges or --t-min/--t-max");
      }
      if (sv_out.empty()) {
        out << text;
      } else {
        detail::ensure_parent(sv_out);
        write_file_atomic(sv_out, text);
        detail::write_resolved(sv, detail::sibling(sv_out, ".config.resolved"));
      }
    };
  });

  // synth
  CLI::App* sy = subcommand("synth", "generate a temporal community graph");
  SyntheticConfig sy_cfg;
  double sy_ratio = 10.0;
  std::string sy_prefix;
  sy->add_option("--k", sy_cfg.k, "communities");
  sy->add_option("--n", sy_cfg.n, "nodes");
  sy->add_option("--T", sy_cfg.timespan, "timespan");
  sy->add_option("--events", sy_cfg.events);
  sy->add_option("--ratio-in-out", sy_ratio, "p_in / p_out");
  sy->add_option("--seed", sy_cfg.seed);
  sy->add_option("--out-prefix", sy_prefix)->required();
  sy->callback([&] {
    action = [&] {
      sy_cfg.p_in = sy_ratio;
      sy_cfg.p_out = 1.0;
      auto g = generate_synthetic(sy_cfg);
      detail::ensure_parent(sy_prefix);
      write_file_atomic(sy_prefix + ".edges.csv", format_edges(g));
      write_file_atomic(sy_prefix + ".labels.csv", format_labels(g));
      detail::write_resolved(sy, sy_prefix + ".config.resolved");
      out << "wrote " << g.num_edges() << " edges over " << g.num_nodes()
          << " nodes to " << sy_prefix << ".{edges,labels}.csv\n";
    };
  });

  // train
  CLI::App* tr = subcommand("train", "contrastive training");
  TrainConfig tr_cfg;
  std::string tr_edges, tr_features, tr_labels, tr_out;
  std::string tr_strategy = "sequential";
  std::string tr_level = "node";
  std::string tr_readout = "mean";
  int tr_precision = 64;
  bool tr_quiet = false;
  FeatureFlags tr_feat;
  tr->add_option("--edges", tr_edges)->required();
  tr->add_option("--features", tr_features);
  tr->add_option("--labels", tr_labels, "accepted for symmetry; unused")
      ;
  tr->add_option("--strategy", tr_strategy)
      ->check(CLI::IsMember({"sequential", "high", "low", "random"}));
  tr->add_option("--s", tr_cfg.sampler.s)->check(CLI::PositiveNumber);
  tr->add_option("--v", tr_cfg.sampler.v);
  tr->add_option("--level", tr_level)->check(CLI::IsMember({"node", "graph"}));
  tr->add_option("--tau", tr_cfg.loss.temperature);
  tr->add_option("--epochs", tr_cfg.epochs);
  tr->add_option("--batch-size", tr_cfg.batch_size);
  tr->add_option("--batches-per-epoch", tr_cfg.batches_per_epoch);
  tr->add_option("--lr", tr_cfg.lr);
  tr->add_option("--weight-decay", tr_cfg.weight_decay);
  tr->add_option("--d-hidden", tr_cfg.dims.d_hidden)->check(CLI::PositiveNumber);
  tr->add_option("--d-out", tr_cfg.dims.d_out)->check(CLI::PositiveNumber);
  tr->add_option("--readout", tr_readout)
      ->check(CLI::IsMember({"mean", "max", "sum"}));
  tr->add_option("--fanout-cap", tr_cfg.model.fanout_cap, "0 = full neighborhoods");
  tr->add_option("--checkpoint-every", tr_cfg.checkpoint_every, "0 = end only");
  tr->add_option("--seed", tr_cfg.seed);
  tr->add_option("--precision", tr_precision)->check(CLI::IsMember({32, 64}));
  tr->add_option("--out", tr_out, "output directory")->required();
  tr->add_flag("--quiet", tr_quiet, "no per-epoch progress on stderr");
  detail::add_feature_flags(tr, tr_feat);
  detail::add_threads_flag(tr, threads);
  tr->callback([&] {
    action = [&] {
      tr_cfg.sampler.strategy = parse_strategy(tr_strategy);
      tr_cfg.sampler.seed = tr_cfg.seed;
      tr_cfg.loss.level = parse_level(tr_level);
      tr_cfg.model.readout = parse_readout(tr_readout);
      tr_cfg.validate();
      auto g = load_temporal_graph(
          tr_edges,
          tr_features.empty() ? std::nullopt : std::optional<fs::path>(tr_features),
          tr_labels.empty() ? std::nullopt : std::optional<fs::path>(tr_labels),
          tr_feat.synthesis());
      const fs::path dir = tr_out;
      fs::create_directories(dir);
      tr_cfg.checkpoint_path = dir / "params.ckpt";
      detail::write_resolved(tr, dir / "config.resolved");
      auto progress = [&](const EpochRecord& r) {
        if (!tr_quiet) {
          err << "epoch " << r.epoch << " loss " << r.loss << " shared "
              << r.shared << '\n';
        }
      };
      TrainLog log;
      if (tr_precision == 32) {
        log = train<float>(g, tr_cfg, progress).log;
      } else {
        log = train<double>(g, tr_cfg, progress).log;
      }
      write_file_atomic(dir / "train_log.csv", log.to_csv());
      out << "final loss " << log.epochs.back().loss << "; wrote "
          << (dir / "params.ckpt").string() << '\n';
    };
  });

  // embed
  CLI::App* em = subcommand("embed", "encoder output for every node");
  std::string em_edges, em_features, em_ckpt, em_out;
  std::string em_activation = "relu";
  FeatureFlags em_feat;
  em->add_option("--edges", em_edges)->required();
  em->add_option("--features", em_features);
  em->add_option("--ckpt", em_ckpt)->required();
  em->add_option("--activation", em_activation, "hidden activation")
      ->check(CLI::IsMember({"relu", "linear"}));
  em->add_option("--out", em_out)->required();
  detail::add_feature_flags(em, em_feat);
  detail::add_threads_flag(em, threads);
  em->callback([&] {
    action = [&] {
      auto g = load_temporal_graph(
          em_edges,
          em_features.empty() ? std::nullopt : std::optional<fs::path>(em_features),
          std::nullopt, em_feat.synthesis());
      const std::string bytes = read_file_bytes(em_ckpt);
      const Activation act =
          em_activation == "linear" ? Activation::kLinear : Activation::kRelu;
      detail::ensure_parent(em_out);
      if (checkpoint_scalar_width(bytes) == 4) {
        detail::write_embeddings<float>(g, bytes, act, em_out);
      } else {
        detail::write_embeddings<double>(g, bytes, act, em_out);
      }
      detail::write_resolved(em, detail::sibling(em_out, ".config.resolved"));
    };
  });

  // linear-eval
  CLI::App* le = subcommand("linear-eval", "linear probe on frozen embeddings");
  std::string le_emb, le_labels, le_out;
  std::string le_ratios = "1:1:8";
  std::uint64_t le_seed = 0;
  ProbeConfig le_cfg;
  le->add_option("--embeddings", le_emb)->required();
  le->add_option("--labels", le_labels)->required();
  le->add_option("--ratios", le_ratios, "train:val:test");
  le->add_option("--seed", le_seed);
  le->add_option("--epochs", le_cfg.epochs);
  le->add_option("--lr", le_cfg.lr);
  le->add_option("--weight-decay", le_cfg.weight_decay);
  le->add_option("--out", le_out)->required();
  detail::add_threads_flag(le, threads);
  le->callback([&] {
    action = [&] {
      const auto ratios = SplitRatios::parse(le_ratios);
      auto table = io::read_node_table(le_emb);
      auto lt = io::read_labels(le_labels);
      std::map<NodeId, std::size_t> row_of;
      for (std::size_t r = 0; r < table.ids.size(); ++r) row_of[table.ids[r]] = r;
      NodeLabels labels;
      labels.names = lt.names;
      labels.class_of.assign(table.ids.size(), -1);
      for (std::size_t i = 0; i < lt.ids.size(); ++i) {
        auto it = row_of.find(lt.ids[i]);
        if (it == row_of.end()) {
          throw DataError("labeled node " + std::to_string(lt.ids[i]) +
                          " has no embedding");
        }
        labels.class_of[it->second] = lt.class_of[i];
      }
      Matrix<double> x(table.ids.size(), table.dim);
      for (std::size_t r = 0; r < table.ids.size(); ++r) {
        std::copy(table.rows[r].begin(), table.rows[r].end(), x.row(r).begin());
      }
      auto report = linear_evaluation(x, labels, ratios, le_seed, le_cfg);
      for (const auto& w : report.config["warnings"]) {
        err << "warning: " << w.get<std::string>() << '\n';
      }
      detail::ensure_parent(le_out);
      write_file_atomic(le_out, report.to_json().dump(2) + "\n");
      detail::write_resolved(le, detail::sibling(le_out, ".config.resolved"));
      out << "accuracy " << report.accuracy() << " weighted_f1 "
          << report.weighted_f1() << '\n';
    };
  });

  // probe-invariance
  CLI::App* pi = subcommand("probe-invariance",
                            "prediction agreement across sequential timespans");
  std::string pi_edges, pi_features, pi_labels, pi_out;
  std::string pi_ratios = "1:1:8";
  std::string pi_encoder = "gcn";
  InvarianceConfig pi_cfg;
  FeatureFlags pi_feat;
  pi->add_option("--edges", pi_edges)->required();
  pi->add_option("--features", pi_features);
  pi->add_option("--labels", pi_labels)->required();
  pi->add_option("--s", pi_cfg.timespans, "number of timespans")
      ->check(CLI::PositiveNumber);
  pi->add_option("--seed", pi_cfg.seed);
  pi->add_option("--ratios", pi_ratios);
  pi->add_option("--encoder", pi_encoder)->check(CLI::IsMember({"gcn", "mlp"}));
  pi->add_option("--epochs", pi_cfg.epochs);
  pi->add_option("--lr", pi_cfg.lr);
  pi->add_option("--weight-decay", pi_cfg.weight_decay);
  pi->add_option("--d-hidden", pi_cfg.d_hidden)->check(CLI::PositiveNumber);
  pi->add_option("--d-out", pi_cfg.d_out)->check(CLI::PositiveNumber);
  pi->add_flag("--shuffle-labels", pi_cfg.shuffle_labels,
               "permute labels independently per timespan");
  pi->add_option("--out", pi_out)->required();
  detail::add_feature_flags(pi, pi_feat);
  detail::add_threads_flag(pi, threads);
  pi->callback([&] {
    action = [&] {
      pi_cfg.ratios = SplitRatios::parse(pi_ratios);
      pi_cfg.encoder = parse_probe_encoder(pi_encoder);
      auto g = load_temporal_graph(
          pi_edges,
          pi_features.empty() ? std::nullopt : std::optional<fs::path>(pi_features),
          fs::path(pi_labels), pi_feat.synthesis());
      auto r = probe_invariance(g, pi_cfg);
      for (const auto& w : r.warnings) err << "warning: " << w << '\n';
      detail::ensure_parent(pi_out);
      write_file_atomic(pi_out, r.to_csv());
      detail::write_resolved(pi, detail::sibling(pi_out, ".config.resolved"));
      out << "mean off-diagonal agreement " << r.mean_off_diagonal() << '\n';
    };
  });

  // grad-check
  CLI::App* gc = subcommand("grad-check", "finite-difference gradient check");
  std::uint64_t gc_seed = 7;
  std::string gc_readout = "mean";
  bool gc_ok = true;
  gc->add_option("--seed", gc_seed);
  gc->add_option("--readout", gc_readout)
      ->check(CLI::IsMember({"mean", "max", "sum"}));
  gc->callback([&] {
    action = [&] {
      auto rep = run_gradcheck(gc_seed, parse_readout(gc_readout));
      for (const auto& l : rep.lines) out << l << '\n';
      out << "max relative error " << rep.max_rel_error << '\n';
      gc_ok = rep.max_rel_error < 1e-4;
    };
  });

  std::vector<std::string> args;
  try {
    args = detail::expand_config(argc, argv);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, err, err);
    if (argc <= 1) err << app.help();
    return kUsage;
  }

  try {
    set_num_threads(threads);
    action();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kNumeric;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kData;
  }
  return gc_ok ? kOk : kNumeric;
}

}  // namespace cldg::cli

#endif  // CLDG_TOOLS_CLI_HPP_
