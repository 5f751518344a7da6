// nodeplan command-line interface: train, target, rollout, eval, serve.

#include <csignal>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "nodeplan/checkpoint.hpp"
#include "nodeplan/demo_io.hpp"
#include "nodeplan/error.hpp"
#include "nodeplan/eval.hpp"
#include "nodeplan/server.hpp"
#include "nodeplan/sim.hpp"
#include "nodeplan/target_array.hpp"
#include "nodeplan/train.hpp"

namespace fs = std::filesystem;
using namespace nodeplan;

namespace {

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::input: return 2;
    case ErrorKind::numeric: return 3;
    case ErrorKind::io: return 4;
    case ErrorKind::network: return 5;
  }
  return 1;
}

std::vector<int> parse_widths(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != tok.size() || v < 1) fail(ErrorKind::input, "--hidden: bad width '" + tok + "'");
    out.push_back(v);
  }
  if (out.empty()) fail(ErrorKind::input, "--hidden: expected comma-separated widths");
  return out;
}

State parse_state(const std::string& s, const char* flag) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    std::size_t used = 0;
    double d = 0.0;
    try {
      d = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != tok.size()) fail(ErrorKind::input, std::string(flag) + ": bad number '" + tok + "'");
    v.push_back(d);
  }
  if (v.empty()) fail(ErrorKind::input, std::string(flag) + ": expected comma-separated numbers");
  return Eigen::Map<State>(v.data(), static_cast<Eigen::Index>(v.size()));
}

fs::path sibling(const fs::path& p, const std::string& suffix) {
  return p.parent_path() / (p.stem().string() + suffix);
}

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

struct TrainArgs {
  std::string data, out, hidden = "64,64", activation = "tanh";
  TrainConfig cfg;
};

int cmd_train(const TrainArgs& a) {
  TrainConfig cfg = a.cfg;
  cfg.hidden = parse_widths(a.hidden);
  cfg.activation = activation_from_string(a.activation);
  cfg.validate();
  const DemonstrationSet ds = load_demo_set(a.data);
  require_valid(ds);
  const TrainResult r = train(ds, cfg, [&](int epoch, double loss) {
    if (epoch % 50 == 0) std::cerr << "epoch " << epoch << " loss " << loss << '\n';
  });
  const fs::path out(a.out);
  save_checkpoint(r.model, out);
  nlohmann::json report = to_json(r.report);
  report["data"] = a.data;
  write_text_file(sibling(out, ".report.json"), dump(report));
  std::cout << "final_loss " << r.report.final_loss << " best_epoch " << r.report.best_epoch << '\n';
  return 0;
}

struct TargetArgs {
  std::string model, data, x0, out;
  double span = 10.0, dt = 1e-3;
  bool trim = false;
};

int cmd_target(const TargetArgs& a) {
  if (a.data.empty() && a.x0.empty()) fail(ErrorKind::input, "target: give --x0 or --data");
  State x0;
  if (!a.x0.empty()) x0 = parse_state(a.x0, "--x0");
  const MlpField model = load_checkpoint(a.model);
  if (x0.size() == 0) {
    const DemonstrationSet ds = load_demo_set(a.data);
    require_valid(ds);
    if (ds.demos.empty()) fail(ErrorKind::input, "target: " + a.data + " has no demonstrations");
    x0 = ds.demos.front().at(0);
  }
  if (x0.size() != model.dim()) fail(ErrorKind::input, "target: x0 dimension does not match the model");
  TargetOptions opts;
  opts.trim_to_period = a.trim;
  const TargetArray ta = generate_target_array(model, x0, a.span, a.dt, opts);
  write_text_file(a.out, target_array_to_json(ta).dump() + "\n");
  std::cout << "points " << ta.size() << " periodic " << (ta.periodic ? "yes" : "no") << " digest "
            << target_array_digest(ta) << '\n';
  return 0;
}

MlpField model_for(const std::string& flag, const ScenarioFile& sf) {
  if (!flag.empty()) return load_checkpoint(flag);
  if (!sf.model_path) fail(ErrorKind::input, "no model: pass --model or set \"model\" in the scenario");
  return load_checkpoint(*sf.model_path);
}

struct RolloutArgs {
  std::string model, scenario, out;
};

int cmd_rollout(const RolloutArgs& a) {
  const ScenarioFile sf = load_scenario_file(a.scenario);
  const MlpField model = model_for(a.model, sf);
  const Scenario sc = build_scenario(sf, model);
  const fs::path out(a.out);
  auto write = [&](const RolloutLog& log, const std::string& error) {
    write_text_file(out, rollout_to_csv(log));
    nlohmann::json j = {{"config", scenario_to_json(sc)}, {"summary", to_json(log.summary)}};
    j["config"]["scenario_file"] = a.scenario;
    if (!error.empty()) j["error"] = error;
    write_text_file(sibling(out, ".summary.json"), dump(j));
  };
  try {
    const RolloutLog log = run(model, sc);
    write(log, "");
    std::cout << "steps " << log.summary.steps << " final_error " << log.summary.final_error << " min_b "
              << log.summary.min_b << '\n';
  } catch (const RolloutError& e) {
    write(e.partial(), e.what());
    throw;
  }
  return 0;
}

struct EvalArgs {
  std::string model, data, split, out, csv, svg;
};

int cmd_eval(const EvalArgs& a) {
  const Split split = parse_split(a.split);
  const MlpField model = load_checkpoint(a.model);
  const DemonstrationSet ds = load_demo_set(a.data);
  require_valid(ds);
  if (ds.dim() != model.dim()) fail(ErrorKind::input, "eval: data dimension does not match the model");
  EvalReport r = evaluate_model(model, ds, split);
  r.config["model"] = a.model;
  r.config["data"] = a.data;
  write_text_file(a.out, dump(to_json(r)));
  if (!a.csv.empty()) write_text_file(a.csv, eval_to_csv(r));
  if (!a.svg.empty()) write_text_file(a.svg, eval_to_svg(r, ds));
  auto line = [](const char* name, const std::optional<SplitStats>& s) {
    std::cout << name;
    if (s) std::cout << " mean " << s->mean << " variance " << s->variance << " n " << s->count << '\n';
    else std::cout << " absent\n";
  };
  line("train", r.train);
  line("test", r.test);
  return 0;
}

struct ServeArgs {
  std::string model, scenario, address = "127.0.0.1";
  int port = 8080;
};

int cmd_serve(const ServeArgs& a) {
  if (a.port < 0 || a.port > 65535) fail(ErrorKind::input, "--port must be in 0..65535");
  const ScenarioFile sf = load_scenario_file(a.scenario);
  const MlpField model = model_for(a.model, sf);
  PlaygroundSession session(model, build_scenario(sf, model));
  PlaygroundServer server(session, {a.address, static_cast<unsigned short>(a.port), true});
  std::cout << "serving on http://" << a.address << ':' << server.port() << " (websocket /ws)" << std::endl;
  server.run();
  std::cout << "shutdown after " << server.frames_broadcast() << " frames" << std::endl;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neural-ODE motion plans with CLF/CBF correction"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "nodeplan 0.1.0");

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "fit a neural vector field to demonstrations");
  train_cmd->add_option("--data", ta.data, "demonstrations (.json set or .csv single demo)")->required()->envname("NODEPLAN_DATA");
  train_cmd->add_option("--out", ta.out, "checkpoint path")->required()->envname("NODEPLAN_OUT");
  train_cmd->add_option("--epochs", ta.cfg.epochs)->envname("NODEPLAN_EPOCHS")->capture_default_str();
  train_cmd->add_option("--seed", ta.cfg.seed)->envname("NODEPLAN_SEED")->capture_default_str();
  train_cmd->add_option("--hidden", ta.hidden, "hidden widths, e.g. 64,64")->envname("NODEPLAN_HIDDEN")->capture_default_str();
  train_cmd->add_option("--window", ta.cfg.window_len, "rollout window (0 = whole demo)")->envname("NODEPLAN_WINDOW")->capture_default_str();
  train_cmd->add_option("--stride", ta.cfg.window_stride)->envname("NODEPLAN_STRIDE")->capture_default_str();
  train_cmd->add_option("--lr", ta.cfg.learning_rate)->envname("NODEPLAN_LR")->capture_default_str();
  train_cmd->add_option("--train-step", ta.cfg.train_step, "max RK4 step (0 = one per sample)")->envname("NODEPLAN_TRAIN_STEP");
  train_cmd->add_option("--activation", ta.activation)->check(CLI::IsMember({"tanh", "softplus"}))->envname("NODEPLAN_ACTIVATION");

  TargetArgs tg;
  auto* target_cmd = app.add_subcommand("target", "integrate a target array from a model");
  target_cmd->add_option("--model", tg.model)->required()->envname("NODEPLAN_MODEL");
  target_cmd->add_option("--x0", tg.x0, "start point, comma-separated")->envname("NODEPLAN_X0");
  target_cmd->add_option("--data", tg.data, "start at the first demo's first sample")->envname("NODEPLAN_DATA");
  target_cmd->add_option("--span", tg.span, "seconds")->envname("NODEPLAN_SPAN")->capture_default_str();
  target_cmd->add_option("--dt", tg.dt)->envname("NODEPLAN_DT")->capture_default_str();
  target_cmd->add_flag("--trim", tg.trim, "cut at the first return to x0")->envname("NODEPLAN_TRIM");
  target_cmd->add_option("--out", tg.out)->required()->envname("NODEPLAN_OUT");

  RolloutArgs ro;
  auto* rollout_cmd = app.add_subcommand("rollout", "simulate a scenario in closed loop");
  rollout_cmd->add_option("--model", ro.model, "overrides the scenario's model")->envname("NODEPLAN_MODEL");
  rollout_cmd->add_option("--scenario", ro.scenario)->required()->envname("NODEPLAN_SCENARIO");
  rollout_cmd->add_option("--out", ro.out, "log CSV; summary goes next to it")->required()->envname("NODEPLAN_OUT");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "score reproductions by DTW");
  eval_cmd->add_option("--model", ev.model)->required()->envname("NODEPLAN_MODEL");
  eval_cmd->add_option("--data", ev.data)->required()->envname("NODEPLAN_DATA");
  eval_cmd->add_option("--split", ev.split, "train:test, e.g. 0,1,2,3:4,5,6")->required()->envname("NODEPLAN_SPLIT");
  eval_cmd->add_option("--out", ev.out, "report JSON")->required()->envname("NODEPLAN_OUT");
  eval_cmd->add_option("--csv", ev.csv, "per-demo table")->envname("NODEPLAN_CSV");
  eval_cmd->add_option("--svg", ev.svg, "overlay plot")->envname("NODEPLAN_SVG");

  ServeArgs sv;
  auto* serve_cmd = app.add_subcommand("serve", "run the playground server");
  serve_cmd->add_option("--model", sv.model, "overrides the scenario's model")->envname("NODEPLAN_MODEL");
  serve_cmd->add_option("--scenario", sv.scenario)->required()->envname("NODEPLAN_SCENARIO");
  serve_cmd->add_option("--port", sv.port)->envname("NODEPLAN_PORT")->capture_default_str();
  serve_cmd->add_option("--address", sv.address)->envname("NODEPLAN_ADDRESS")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*train_cmd) return cmd_train(ta);
    if (*target_cmd) return cmd_target(tg);
    if (*rollout_cmd) return cmd_rollout(ro);
    if (*eval_cmd) return cmd_eval(ev);
    if (*serve_cmd) return cmd_serve(sv);
  } catch (const Error& e) {
    std::cerr << "nodeplan: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "nodeplan: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
