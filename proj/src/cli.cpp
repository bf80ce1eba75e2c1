//
// cvgae - conditional variational graph autoencoder for conformations
// SPDX-License-Identifier: Apache-2.0
//

#include "cvgae/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "cvgae/cvgae.hpp"
#include "cvgae/dataset.hpp"
#include "cvgae/eval.hpp"
#include "cvgae/hash.hpp"
#include "cvgae/io.hpp"

namespace cvgae {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {
  void check_keys(const json &obj, std::initializer_list<std::string_view> allowed,
                  const std::string &where) {
    if (!obj.is_object())
      throw ConfigError(where + ": expected an object");
    for (const auto &[key, _]: obj.items())
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
        throw ConfigError(where + ": unknown key '" + key + "'");
  }

  template <typename T>
  void read_key(const json &obj, const char *key, T &dst, const std::string &where) {
    if (!obj.contains(key))
      return;
    try {
      dst = obj.at(key).get<T>();
    } catch (const json::exception &) {
      throw ConfigError(where + "." + key + ": wrong type");
    }
  }

  // Non-negative integers only; JSON doubles and negatives are rejected.
  void read_count(const json &obj, const char *key, std::size_t &dst,
                  const std::string &where) {
    if (!obj.contains(key))
      return;
    const json &v = obj.at(key);
    if (!v.is_number_unsigned())
      throw ConfigError(where + "." + key + ": expected a non-negative integer");
    dst = v.get<std::size_t>();
  }

  void read_number(const json &obj, const char *key, double &dst,
                   const std::string &where) {
    if (!obj.contains(key))
      return;
    if (!obj.at(key).is_number())
      throw ConfigError(where + "." + key + ": expected a number");
    dst = obj.at(key).get<double>();
  }

  std::string hex(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
  }

  void write_text(const fs::path &path, const std::string &text) {
    if (path.has_parent_path())
      fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
      throw std::runtime_error("cannot write '" + path.string() + "'");
    out << text;
    if (!out)
      throw std::runtime_error("failed writing '" + path.string() + "'");
  }

  template <typename Fn>
  std::string render(Fn &&fn) {
    std::ostringstream os;
    fn(os);
    return os.str();
  }

  struct Manifest {
    Manifest(std::string cmd, json cfg, std::uint64_t s, std::uint64_t fingerprint)
        : command(std::move(cmd)), config(std::move(cfg)), seed(s),
          dataset_fingerprint(fingerprint) {}

    std::string command;
    json config;
    std::uint64_t seed = 0;
    std::uint64_t dataset_fingerprint = 0;
    json inputs = json::object();
    std::vector<std::string> outputs;

    std::string dump() const {
      json j = { { "command", command },
                 { "version", std::string(kVersion) },
                 { "seed", seed },
                 { "config", config },
                 { "config_hash", hex(fnv(config.dump())) },
                 { "inputs", inputs },
                 { "dataset_fingerprint", hex(dataset_fingerprint) },
                 { "outputs", outputs } };
      return j.dump(2) + "\n";
    }

    static std::uint64_t fnv(std::string_view s) {
      Fnv1a h;
      h.str(s);
      return h.value();
    }
  };

  json config_object(const RunConfig &c) { return json::parse(run_config_json(c)); }

  FilterProfile resolve_profile(const DatasetConfig &d) {
    if (d.custom_profile)
      return *d.custom_profile;
    return FilterProfile::by_name(d.profile);
  }

  std::vector<std::size_t> split_indices(const Dataset &ds, const std::string &name) {
    std::vector<std::size_t> idx = ds.split(name);
    if (idx.empty())
      throw std::runtime_error("split '" + name + "' is empty");
    return idx;
  }

  void write_samples(std::ostream &os, const MolecularGraph &graph,
                     const std::vector<Conformation> &confs) {
    XyzBlock block;
    block.id = graph.id;
    for (const auto &a: graph.atoms)
      block.elements.push_back(a.element);
    for (std::size_t k = 0; k < confs.size(); ++k) {
      block.sample = k;
      block.conformation = confs[k];
      write_xyz_block(os, block);
    }
  }

  // -------------------------------------------------------------------------
  // Commands

  struct Common {
    std::string config_path;
    std::string dataset_path;
    std::string checkpoint_path;
    std::string out_path;
    std::optional<std::uint64_t> seed;
    std::string split;
    std::optional<std::size_t> samples;
  };

  RunConfig resolve_config(const Common &c) {
    RunConfig rc = c.config_path.empty() ? RunConfig {} : load_run_config(c.config_path);
    if (c.seed)
      rc.seed = *c.seed;
    if (c.samples)
      rc.sampling.samples = *c.samples;
    if (!c.out_path.empty())
      rc.output_dir = c.out_path;
    rc.validate();
    return rc;
  }

  int cmd_ingest(const Common &c, std::vector<std::string> paths,
                 const std::optional<std::string> &profile,
                 std::optional<std::size_t> n_valid, std::optional<std::size_t> n_test,
                 std::ostream &out) {
    RunConfig rc = resolve_config(c);
    if (paths.empty())
      paths = rc.dataset.sdf;
    if (paths.empty())
      throw ConfigError("ingest: no SDF inputs given");
    rc.dataset.sdf = paths;
    if (profile) {
      rc.dataset.profile = *profile;
      rc.dataset.custom_profile.reset();
    }
    if (n_valid)
      rc.dataset.valid = *n_valid;
    if (n_test)
      rc.dataset.test = *n_test;
    rc.validate();
    if (rc.output_dir.empty())
      throw ConfigError("ingest: --out is required");

    const bool filter = rc.dataset.custom_profile || rc.dataset.profile != "none";
    const FilterProfile fp = filter ? resolve_profile(rc.dataset) : FilterProfile {};
    std::vector<MoleculeRecord> records;
    std::size_t rejected = 0;
    std::ostringstream reasons;
    for (const auto &path: paths) {
      SdfParseResult r = parse_sdf(read_file(path), filter ? &fp : nullptr);
      for (const auto &rej: r.rejected) {
        ++rejected;
        reasons << "rejected " << path << " record " << rej.record_index + 1
                << (rej.id.empty() ? "" : " (" + rej.id + ")") << ": " << rej.reason
                << '\n';
      }
      for (auto &rec: r.accepted)
        records.push_back(std::move(rec));
    }
    if (records.empty())
      throw std::runtime_error("ingest: no molecule was accepted");
    Dataset ds = build_dataset(std::move(records));
    split_dataset(ds, rc.dataset.valid, rc.dataset.test, derive_seed(rc.seed, "split"));

    const fs::path bundle = rc.output_dir;
    write_text(bundle, render([&](std::ostream &os) { save_bundle(os, ds); }));
    Manifest m("ingest", config_object(rc), rc.seed, ds.fingerprint());
    m.inputs["sdf"] = paths;
    m.outputs = { bundle.string() };
    write_text(bundle.string() + ".manifest.json", m.dump());

    out << "accepted " << ds.size() << '\n'
        << "rejected " << rejected << '\n'
        << reasons.str() << "splits train=" << ds.splits.train.size()
        << " valid=" << ds.splits.valid.size() << " test=" << ds.splits.test.size()
        << '\n';
    return 0;
  }

  int cmd_stats(const Common &c, std::ostream &out) {
    RunConfig rc = resolve_config(c);
    if (rc.output_dir.empty())
      throw ConfigError("stats: --out is required");
    const Dataset ds = load_bundle_file(c.dataset_path);
    const std::string split = c.split.empty() ? "all" : c.split;
    const DatasetStats st = dataset_stats(ds, split_indices(ds, split));
    const fs::path dir = rc.output_dir;
    write_text(dir / "molecule_stats.csv",
               render([&](std::ostream &os) { write_molecule_stats_csv(os, st); }));
    write_text(dir / "element_stats.csv",
               render([&](std::ostream &os) { write_element_stats_csv(os, st); }));
    Manifest m("stats", config_object(rc), rc.seed, ds.fingerprint());
    m.inputs = { { "dataset", c.dataset_path }, { "split", split } };
    m.outputs = { "molecule_stats.csv", "element_stats.csv" };
    write_text(dir / "manifest.json", m.dump());

    std::vector<double> heavy, mass, rot;
    for (const auto &s: st.molecules) {
      heavy.push_back(static_cast<double>(s.heavy_atoms));
      mass.push_back(s.mass);
      rot.push_back(static_cast<double>(s.rotatable));
    }
    out << "molecules " << st.molecules.size() << '\n'
        << "median heavy atoms " << format_double(median_of(heavy)) << '\n'
        << "median mass " << format_double(median_of(mass)) << '\n'
        << "median rotatable bonds " << format_double(median_of(rot)) << '\n';
    return 0;
  }

  int cmd_train(const Common &c, std::ostream &out) {
    RunConfig rc = resolve_config(c);
    if (rc.output_dir.empty())
      throw ConfigError("train: --out is required");
    const Dataset ds = load_bundle_file(c.dataset_path);
    const fs::path dir = rc.output_dir;
    fs::create_directories(dir);

    std::optional<Trainer> trainer;
    const bool resume = !c.checkpoint_path.empty();
    if (resume) {
      Checkpoint ckpt = load_checkpoint_file(c.checkpoint_path);
      if (!c.config_path.empty())
        ckpt.train.max_steps = rc.train.max_steps;
      trainer.emplace(ds, std::move(ckpt));
    } else {
      ModelConfig mc;
      mc.mpnn = rc.model;
      mc.node_dim = ds.vocab.node_dim();
      mc.init_seed = derive_seed(rc.seed, "init");
      TrainConfig tc = rc.train;
      tc.seed = derive_seed(rc.seed, "train");
      trainer.emplace(ds, mc, tc);
    }

    const fs::path loss_path = dir / "loss.csv";
    std::vector<std::string> written;
    const std::size_t interval = trainer->config().checkpoint_interval;
    const std::size_t max_steps = trainer->config().max_steps;
    const auto trace = trainer->run([&](const Trainer &t, const LossRecord &r) {
      if (interval > 0 && r.step % interval == 0 && r.step < max_steps) {
        const std::string name = "checkpoint-" + std::to_string(r.step) + ".ckpt";
        save_checkpoint_file((dir / name).string(), t.checkpoint());
        written.push_back(name);
      }
      if (r.step % 100 == 0)
        out << "step " << r.step << " loss " << format_double(r.loss()) << '\n';
    });
    save_checkpoint_file((dir / "checkpoint.ckpt").string(), trainer->checkpoint());
    written.push_back("checkpoint.ckpt");

    std::string csv = render([&](std::ostream &os) { write_loss_csv(os, trace); });
    if (resume && fs::exists(loss_path)) {
      std::ofstream app(loss_path, std::ios::binary | std::ios::app);
      app << csv.substr(csv.find('\n') + 1);
    } else {
      write_text(loss_path, csv);
    }
    written.push_back("loss.csv");

    Manifest m("train", config_object(rc), rc.seed, ds.fingerprint());
    m.inputs = { { "dataset", c.dataset_path } };
    if (resume)
      m.inputs["resume_from"] = c.checkpoint_path;
    m.outputs = written;
    write_text(dir / "manifest.json", m.dump());

    out << "trained to step " << trainer->steps_taken()
        << (trainer->stopped_early() ? " (early stop)" : "") << '\n';
    if (!trace.empty())
      out << "final loss " << format_double(trace.back().loss()) << '\n';
    return 0;
  }

  int cmd_sample(const Common &c, bool baseline, std::ostream &out) {
    RunConfig rc = resolve_config(c);
    if (rc.output_dir.empty())
      throw ConfigError("sample: --out is required");
    const Dataset ds = load_bundle_file(c.dataset_path);
    const std::string split = c.split.empty() ? "test" : c.split;
    const auto indices = split_indices(ds, split);
    const std::size_t s = rc.sampling.samples;

    std::optional<Model> model;
    if (!baseline) {
      if (c.checkpoint_path.empty())
        throw ConfigError("sample: --checkpoint is required (or use --baseline)");
      Checkpoint ckpt = load_checkpoint_file(c.checkpoint_path);
      if (ckpt.vocab_fingerprint != ds.vocab.fingerprint())
        throw CheckpointError("checkpoint vocabulary does not match dataset");
      model.emplace(ckpt.model, std::move(ckpt.params));
    }
    Rng rng(derive_seed(rc.seed, baseline ? "baseline" : "sample"));
    std::ostringstream os;
    for (auto i: indices) {
      const DatasetEntry &e = ds.entries[i];
      const auto confs =
          baseline ? random_baseline(e.graph, s, rng, rc.sampling.baseline_scale)
                   : sample_conformations(*model, e.features, s, rng);
      write_samples(os, e.graph, confs);
    }
    const fs::path path = rc.output_dir;
    write_text(path, os.str());
    Manifest m("sample", config_object(rc), rc.seed, ds.fingerprint());
    m.inputs = { { "dataset", c.dataset_path },
                 { "split", split },
                 { "method", baseline ? "random-baseline" : "cvgae" } };
    if (!baseline)
      m.inputs["checkpoint"] = c.checkpoint_path;
    m.outputs = { path.string() };
    write_text(path.string() + ".manifest.json", m.dump());
    out << "wrote " << indices.size() * s << " conformations for " << indices.size()
        << " molecules\n";
    return 0;
  }

  int cmd_eval(const Common &c, const std::vector<std::string> &inputs,
               std::ostream &out) {
    RunConfig rc = resolve_config(c);
    if (rc.output_dir.empty())
      throw ConfigError("eval: --out is required");
    if (inputs.empty())
      throw ConfigError("eval: no conformation files given");
    const Dataset ds = load_bundle_file(c.dataset_path);
    const std::string split = c.split.empty() ? "test" : c.split;
    const auto indices = split_indices(ds, split);

    std::vector<MethodSamples> methods;
    json inputs_json = json::object();
    for (const auto &spec: inputs) {
      const auto eq = spec.find('=');
      MethodSamples ms;
      const std::string path = eq == std::string::npos ? spec : spec.substr(eq + 1);
      ms.method = eq == std::string::npos ? fs::path(path).stem().string()
                                          : spec.substr(0, eq);
      for (auto &b: read_xyz(read_file(path)))
        ms.by_id[b.id].push_back(std::move(b.conformation));
      std::size_t most = 0;
      for (const auto &[_, v]: ms.by_id)
        most = std::max(most, v.size());
      ms.requested = c.samples ? *c.samples : most;
      inputs_json[ms.method] = path;
      methods.push_back(std::move(ms));
    }
    const auto reports = eval_methods(methods, ds, indices);

    std::map<std::string, std::size_t> entry_of;
    for (auto i: indices)
      entry_of.emplace(ds.entries[i].graph.id, i);
    std::vector<std::string> names;
    std::vector<DiversityStats> div;
    std::string groups, per_mol;
    for (std::size_t m = 0; m < methods.size(); ++m) {
      std::vector<std::vector<Conformation>> samples;
      std::vector<std::vector<bool>> masks;
      for (const auto &me: reports[m].molecules) {
        const auto &g = ds.entries[entry_of.at(me.id)].graph;
        std::vector<Conformation> ok;
        for (const auto &conf: methods[m].by_id.at(me.id))
          if (conf.size() == g.atom_count() && conf.all_finite())
            ok.push_back(conf);
        samples.push_back(std::move(ok));
        std::vector<bool> mask = g.heavy_mask();
        if (std::none_of(mask.begin(), mask.end(), [](bool b) { return b; }))
          mask.assign(mask.size(), true);
        masks.push_back(std::move(mask));
      }
      names.push_back(methods[m].method);
      div.push_back(diversity(samples, masks));
      groups += render([&](std::ostream &os) {
        write_group_csv(os, methods[m].method,
                        group_by_heavy_atoms(reports[m].molecules), m == 0);
      });
      std::string rows =
          render([&](std::ostream &os) { write_molecule_eval_csv(os, reports[m]); });
      per_mol += m == 0 ? rows : rows.substr(rows.find('\n') + 1);
    }

    const fs::path dir = rc.output_dir;
    write_text(dir / "per_molecule.csv", per_mol);
    write_text(dir / "aggregate.csv",
               render([&](std::ostream &os) { write_aggregate_csv(os, reports); }));
    write_text(dir / "diversity.csv",
               render([&](std::ostream &os) { write_diversity_csv(os, names, div); }));
    write_text(dir / "groups.csv", groups);
    Manifest mf("eval", config_object(rc), rc.seed, ds.fingerprint());
    mf.inputs = { { "dataset", c.dataset_path }, { "split", split },
                  { "samples", inputs_json } };
    mf.outputs = { "per_molecule.csv", "aggregate.csv", "diversity.csv", "groups.csv" };
    write_text(dir / "manifest.json", mf.dump());

    for (const auto &r: reports)
      out << r.method << ": median mean " << format_double(r.median_of_mean)
          << ", median std " << format_double(r.median_of_std) << ", median best "
          << format_double(r.median_of_best) << ", success "
          << format_double(r.success_per_test_set) << '/'
          << format_double(r.success_per_molecule) << " over "
          << r.molecules.size() << " molecules\n";
    return 0;
  }

  int cmd_gradcheck(const Common &c, std::size_t molecule, double tolerance,
                    double step, bool inject_fault, std::ostream &out) {
    RunConfig rc = resolve_config(c);
    const Dataset ds = load_bundle_file(c.dataset_path);
    if (molecule >= ds.size())
      throw std::out_of_range("gradcheck: molecule index " + std::to_string(molecule)
                              + " out of range (dataset has "
                              + std::to_string(ds.size()) + ")");
    ModelConfig mc;
    mc.mpnn = rc.model;
    mc.node_dim = ds.vocab.node_dim();
    mc.init_seed = derive_seed(rc.seed, "init");
    Model model(mc);
    const DatasetEntry &e = ds.entries[molecule];
    std::function<void(std::vector<Tensor> &)> hook;
    if (inject_fault)
      hook = [](std::vector<Tensor> &grads) {
        for (auto &g: grads)
          for (std::size_t i = 0; i < g.size(); ++i)
            g[i] = -g[i];
      };
    const auto report = elbo_grad_check(model, e.features, e.conformation,
                                        rc.train.alpha, derive_seed(rc.seed, "noise"),
                                        step, hook);
    const bool ok = report.max_rel_error <= tolerance;
    out << "molecule " << e.graph.id << " (" << e.graph.atom_count() << " atoms)\n"
        << "entries checked " << report.entries_checked << '\n'
        << "max relative error " << format_double(report.max_rel_error) << " at "
        << report.worst_param << '[' << report.worst_entry << "] analytic "
        << format_double(report.worst_analytic) << " numeric "
        << format_double(report.worst_numeric) << '\n'
        << (ok ? "PASS" : "FAIL") << '\n';
    if (!rc.output_dir.empty()) {
      json j = { { "molecule", e.graph.id },
                 { "entries_checked", report.entries_checked },
                 { "max_rel_error", report.max_rel_error },
                 { "worst_param", report.worst_param },
                 { "worst_entry", report.worst_entry },
                 { "pass", ok } };
      const fs::path dir = rc.output_dir;
      write_text(dir / "gradcheck.json", j.dump(2) + "\n");
      Manifest m("gradcheck", config_object(rc), rc.seed, ds.fingerprint());
      m.inputs = { { "dataset", c.dataset_path }, { "molecule", molecule } };
      m.outputs = { "gradcheck.json" };
      write_text(dir / "manifest.json", m.dump());
    }
    return ok ? 0 : 1;
  }
}  // namespace

// ---------------------------------------------------------------------------
// Config

void RunConfig::validate() const {
  model.validate();
  train.validate();
  if (sampling.samples < 1)
    throw ConfigError("sampling.samples must be >= 1");
  if (!(sampling.baseline_scale >= 0.0))
    throw ConfigError("sampling.baseline_scale must be >= 0");
  if (!dataset.custom_profile && dataset.profile != "none")
    FilterProfile::by_name(dataset.profile);
}

RunConfig parse_run_config(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception &e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(root, { "dataset", "model", "train", "sampling", "output_dir", "seed" },
             "config");
  RunConfig rc;
  if (root.contains("dataset")) {
    const json &d = root["dataset"];
    check_keys(d, { "sdf", "profile", "valid", "test" }, "dataset");
    read_key(d, "sdf", rc.dataset.sdf, "dataset");
    if (d.contains("profile")) {
      const json &p = d["profile"];
      if (p.is_string()) {
        rc.dataset.profile = p.get<std::string>();
      } else {
        check_keys(p, { "name", "max_heavy", "elements" }, "dataset.profile");
        FilterProfile fp;
        read_key(p, "name", fp.name, "dataset.profile");
        read_count(p, "max_heavy", fp.max_heavy, "dataset.profile");
        read_key(p, "elements", fp.allowed_elements, "dataset.profile");
        rc.dataset.profile = fp.name;
        rc.dataset.custom_profile = fp;
      }
    }
    read_count(d, "valid", rc.dataset.valid, "dataset");
    read_count(d, "test", rc.dataset.test, "dataset");
  }
  if (root.contains("model")) {
    const json &m = root["model"];
    check_keys(m, { "rounds", "hidden", "head_hidden" }, "model");
    read_count(m, "rounds", rc.model.rounds, "model");
    read_count(m, "hidden", rc.model.hidden, "model");
    read_count(m, "head_hidden", rc.model.head_hidden, "model");
  }
  if (root.contains("train")) {
    const json &t = root["train"];
    check_keys(t,
               { "learning_rate", "batch_size", "alpha", "dropout", "max_steps",
                 "checkpoint_interval", "clip_norm", "early_stopping_patience",
                 "validation_interval" },
               "train");
    read_number(t, "learning_rate", rc.train.learning_rate, "train");
    read_count(t, "batch_size", rc.train.batch_size, "train");
    read_number(t, "alpha", rc.train.alpha, "train");
    read_number(t, "dropout", rc.train.dropout, "train");
    read_count(t, "max_steps", rc.train.max_steps, "train");
    read_count(t, "checkpoint_interval", rc.train.checkpoint_interval, "train");
    if (t.contains("clip_norm") && !t["clip_norm"].is_null()) {
      double v = 0.0;
      read_number(t, "clip_norm", v, "train");
      rc.train.clip_norm = v;
    }
    read_count(t, "early_stopping_patience", rc.train.early_stopping_patience, "train");
    read_count(t, "validation_interval", rc.train.validation_interval, "train");
  }
  if (root.contains("sampling")) {
    const json &s = root["sampling"];
    check_keys(s, { "samples", "baseline_scale" }, "sampling");
    read_count(s, "samples", rc.sampling.samples, "sampling");
    read_number(s, "baseline_scale", rc.sampling.baseline_scale, "sampling");
  }
  read_key(root, "output_dir", rc.output_dir, "config");
  if (root.contains("seed")) {
    if (!root["seed"].is_number_unsigned())
      throw ConfigError("config.seed: expected a non-negative integer");
    rc.seed = root["seed"].get<std::uint64_t>();
  }
  try {
    rc.validate();
  } catch (const ConfigError &) {
    throw;
  } catch (const std::invalid_argument &e) {
    throw ConfigError(e.what());
  }
  return rc;
}

RunConfig load_run_config(const std::string &path) {
  return parse_run_config(read_file(path));
}

std::string run_config_json(const RunConfig &c) {
  json profile;
  if (c.dataset.custom_profile)
    profile = { { "name", c.dataset.custom_profile->name },
                { "max_heavy", c.dataset.custom_profile->max_heavy },
                { "elements", c.dataset.custom_profile->allowed_elements } };
  else
    profile = c.dataset.profile;
  json j = {
    { "dataset",
      { { "sdf", c.dataset.sdf },
        { "profile", profile },
        { "valid", c.dataset.valid },
        { "test", c.dataset.test } } },
    { "model",
      { { "rounds", c.model.rounds },
        { "hidden", c.model.hidden },
        { "head_hidden", c.model.head_hidden } } },
    { "train",
      { { "learning_rate", c.train.learning_rate },
        { "batch_size", c.train.batch_size },
        { "alpha", c.train.alpha },
        { "dropout", c.train.dropout },
        { "max_steps", c.train.max_steps },
        { "checkpoint_interval", c.train.checkpoint_interval },
        { "clip_norm", c.train.clip_norm ? json(*c.train.clip_norm) : json(nullptr) },
        { "early_stopping_patience", c.train.early_stopping_patience },
        { "validation_interval", c.train.validation_interval } } },
    { "sampling",
      { { "samples", c.sampling.samples },
        { "baseline_scale", c.sampling.baseline_scale } } },
    { "output_dir", c.output_dir },
    { "seed", c.seed },
  };
  return j.dump();
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream) {
  Fnv1a h;
  h.u64(seed);
  h.str(stream);
  // splitmix64 finalizer
  std::uint64_t z = h.value() + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// ---------------------------------------------------------------------------
// Entry point

int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
  CLI::App app { "Conformation generation with a conditional variational graph "
                 "autoencoder",
                 "cvgae" };
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  Common c;
  auto common = [&](CLI::App *sub, bool dataset, bool checkpoint) {
    sub->add_option("--config", c.config_path, "JSON run configuration")
        ->check(CLI::ExistingFile);
    if (dataset)
      sub->add_option("--dataset", c.dataset_path, "dataset bundle")->required();
    if (checkpoint)
      sub->add_option("--checkpoint", c.checkpoint_path, "checkpoint file");
    sub->add_option("--out", c.out_path, "output path");
    sub->add_option("--seed", c.seed, "random seed (overrides the config)");
  };

  auto *ingest = app.add_subcommand("ingest", "parse and filter SDF files into a bundle");
  std::vector<std::string> sdf_paths;
  std::optional<std::string> profile;
  std::optional<std::size_t> n_valid, n_test;
  common(ingest, false, false);
  ingest->add_option("sdf", sdf_paths, "input SDF files");
  ingest->add_option("--profile", profile, "qm9, cod, csd or none");
  ingest->add_option("--valid", n_valid, "validation split size");
  ingest->add_option("--test", n_test, "test split size");

  auto *stats = app.add_subcommand("stats", "dataset statistics tables");
  common(stats, true, false);
  stats->add_option("--split", c.split, "train, valid, test or all");

  auto *train = app.add_subcommand("train", "train a model");
  common(train, true, true);

  auto *sample = app.add_subcommand("sample", "sample conformations");
  bool baseline = false;
  common(sample, true, true);
  sample->add_option("--split", c.split, "train, valid, test or all");
  sample->add_option("--samples", c.samples, "conformations per molecule");
  sample->add_flag("--baseline", baseline, "random-coordinate baseline instead");

  auto *evaluate = app.add_subcommand("eval", "RMSD and diversity reports");
  std::vector<std::string> eval_inputs;
  common(evaluate, true, false);
  evaluate->add_option("--split", c.split, "train, valid, test or all");
  evaluate->add_option("--samples", c.samples,
                       "conformations requested per molecule");
  evaluate->add_option("inputs", eval_inputs, "[name=]conformations.xyz");

  auto *gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient check");
  std::size_t molecule = 0;
  double tolerance = 1e-4, step = 1e-4;
  bool inject_fault = false;
  common(gradcheck, true, false);
  gradcheck->add_option("--molecule", molecule, "dataset entry index");
  gradcheck->add_option("--tolerance", tolerance, "maximum relative error");
  gradcheck->add_option("--step", step, "finite-difference step");
  gradcheck->add_flag("--inject-fault", inject_fault)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    return app.exit(e, out, err);
  }

  try {
    if (ingest->parsed())
      return cmd_ingest(c, sdf_paths, profile, n_valid, n_test, out);
    if (stats->parsed())
      return cmd_stats(c, out);
    if (train->parsed())
      return cmd_train(c, out);
    if (sample->parsed())
      return cmd_sample(c, baseline, out);
    if (evaluate->parsed())
      return cmd_eval(c, eval_inputs, out);
    if (gradcheck->parsed())
      return cmd_gradcheck(c, molecule, tolerance, step, inject_fault, out);
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace cvgae
