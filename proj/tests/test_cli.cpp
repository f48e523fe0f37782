#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

// CTM_BIN is injected by the build as the absolute path of the ctm executable
#ifndef CTM_BIN
#error "CTM_BIN must point at the ctm binary"
#endif

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

fs::path work_dir() {
  static fs::path dir = [] {
    fs::path p = fs::temp_directory_path() / "ctm_cli_tests";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

RunResult run(const std::string& args) {
  fs::path out = work_dir() / "stdout.txt";
  fs::path err = work_dir() / "stderr.txt";
  std::string cmd = std::string("\"") + CTM_BIN + "\" " + args + " > \"" +
                    out.string() + "\" 2> \"" + err.string() + "\"";
  int rc = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

// small two-topic corpus fixture shared across the pipeline cases
struct Pipeline {
  fs::path dir;
  std::string corpus, ref, prior, model, theta, embeddings, scores;

  Pipeline() {
    dir = work_dir() / "pipeline";
    fs::create_directories(dir);
    corpus = (dir / "corpus").string();
    ref = (dir / "ref.json").string();
    prior = (dir / "prior.json").string();
    model = (dir / "model.bin").string();
    theta = (dir / "theta.csv").string();
    embeddings = (dir / "vec.txt").string();
    scores = (dir / "scores.csv").string();

    std::ofstream jl(dir / "docs.jsonl");
    for (int i = 0; i < 6; ++i) {
      jl << json{{"id", "a" + std::to_string(i)},
                 {"text", "apple banana cherry apple banana"},
                 {"label", "alpha"}}
                .dump()
         << "\n";
      jl << json{{"id", "b" + std::to_string(i)},
                 {"text", "stone metal copper stone metal"},
                 {"label", "beta"}}
                .dump()
         << "\n";
    }
    jl.close();

    std::ofstream vec(embeddings);
    vec << "2 8\n";
    vec << "apple 1 0 0 0 0.5 0 0 0\n";
    vec << "stone 0 1 0 0 0 0.5 0 0\n";
    vec.close();

    std::ofstream sc(scores);
    sc << "doc_id,alpha,beta\n";
    for (int i = 0; i < 6; ++i) {
      sc << "a" << i << ",0.9,0.1\n";
      sc << "b" << i << ",0.1,0.9\n";
    }
  }
};

Pipeline& pipeline() {
  static Pipeline p;
  return p;
}

std::string q(const std::string& s) { return "\"" + s + "\""; }

}  // namespace

TEST_CASE("unknown subcommand exits 1 with usage") {
  RunResult r = run("frobnicate");
  CHECK(r.exit_code == 1);
  CHECK(r.err.find("Usage") != std::string::npos);
  CHECK(r.err.find("demo") != std::string::npos);
}

TEST_CASE("help exits 0") {
  RunResult r = run("--help");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("Subcommands") != std::string::npos);
}

TEST_CASE("missing required option exits 1") {
  RunResult r = run("infer --model x.bin");
  CHECK(r.exit_code == 1);
}

TEST_CASE("missing file exits 3") {
  RunResult r = run("top-words --model /nonexistent/model.bin");
  CHECK(r.exit_code == 3);
  CHECK(r.err.find("io error") != std::string::npos);
}

TEST_CASE("pipeline: preprocess through eval runs clean") {
  Pipeline& p = pipeline();

  RunResult r = run("preprocess --input " + q((p.dir / "docs.jsonl").string()) +
                    " --out " + q(p.corpus) + " --min-count 1 --max-df 1.0");
  REQUIRE(r.exit_code == 0);
  json summary = json::parse(r.out);
  CHECK(summary["docs"] == 12);
  CHECK(summary["vocab"] == 6);

  r = run("train-reference --corpus " + q(p.corpus) +
          " --topics \"alpha,beta\" --iters 60 --burn-in 30 --seed 1 --out " +
          q(p.ref));
  REQUIRE(r.exit_code == 0);
  CHECK(json::parse(r.out)["k"] == 2);
  json refj = json::parse(slurp(p.ref));
  CHECK(refj["_meta"]["config"]["iters"] == 60);
  CHECK(refj["_meta"]["seed"] == 1);

  r = run("gen-prior --corpus " + q(p.corpus) + " --ref " + q(p.ref) +
          " --scores " + q(p.scores) + " --out " + q(p.prior));
  REQUIRE(r.exit_code == 0);
  CHECK(json::parse(r.out)["fallback_docs"] == 0);

  r = run("train --corpus " + q(p.corpus) + " --ref " + q(p.ref) + " --prior " +
          q(p.prior) + " --embeddings " + q(p.embeddings) +
          " --hidden 8 --epochs 5 --batch-size 4 --seed 2 --out " + q(p.model));
  REQUIRE(r.exit_code == 0);
  json trainj = json::parse(r.out);
  CHECK(trainj["epochs"] == 5);
  CHECK(trainj["final"].contains("total"));

  r = run("infer --model " + q(p.model) + " --corpus " + q(p.corpus) + " --out " +
          q(p.theta));
  REQUIRE(r.exit_code == 0);
  std::string theta = slurp(p.theta);
  CHECK(theta.rfind("doc_id,alpha,beta", 0) == 0);
  CHECK(std::count(theta.begin(), theta.end(), '\n') == 13);  // header + 12 docs

  r = run("top-words --model " + q(p.model) + " -n 3");
  REQUIRE(r.exit_code == 0);
  json tw = json::parse(r.out);
  CHECK(tw["words"].size() == 2);
  CHECK(tw["words"][0].size() == 3);

  r = run("eval-topics --model " + q(p.model) + " --corpus " + q(p.corpus) +
          " --tc-words 2 --td-words 3");
  REQUIRE(r.exit_code == 0);
  json et = json::parse(r.out);
  CHECK(et.contains("tc"));
  CHECK(et["tq"] == doctest::Approx(et["tc"].get<double>() * et["td"].get<double>()));

  r = run("eval-classify --theta " + q(p.theta) + " --gold " +
          q(p.corpus + "/labels.csv"));
  REQUIRE(r.exit_code == 0);
  json ec = json::parse(r.out);
  CHECK(ec["docs"] == 12);
  CHECK(ec["accuracy"].get<double>() >= 0.5);

  r = run("compare --model-a " + q(p.model) + " --model-b " + q(p.model));
  REQUIRE(r.exit_code == 0);
  json cj = json::parse(r.out);
  CHECK(cj["topics"][0]["kl_ab"].get<double>() == 0.0);
  CHECK(cj["ranking"].size() == 2);

  r = run("context-words --model " + q(p.model) + " --topic alpha -n 2");
  REQUIRE(r.exit_code == 0);
  CHECK(json::parse(r.out)["words"].size() == 2);

  r = run("context-words --model " + q(p.model) + " --topic nope -n 2");
  CHECK(r.exit_code == 1);
}

TEST_CASE("training is reproducible at the artifact level") {
  Pipeline& p = pipeline();
  std::string m2 = (p.dir / "model2.bin").string();
  RunResult r = run("train --corpus " + q(p.corpus) + " --ref " + q(p.ref) +
                    " --prior " + q(p.prior) + " --embeddings " + q(p.embeddings) +
                    " --hidden 8 --epochs 5 --batch-size 4 --seed 2 --out " + q(m2));
  REQUIRE(r.exit_code == 0);
  CHECK(slurp(p.model) == slurp(m2));

  std::string m3 = (p.dir / "model3.bin").string();
  r = run("train --corpus " + q(p.corpus) + " --ref " + q(p.ref) + " --prior " +
          q(p.prior) + " --embeddings " + q(p.embeddings) +
          " --hidden 8 --epochs 5 --batch-size 4 --seed 3 --out " + q(m3));
  REQUIRE(r.exit_code == 0);
  CHECK(slurp(p.model) != slurp(m3));
}

TEST_CASE("diverging training exits 2 and still saves a checkpoint") {
  Pipeline& p = pipeline();
  std::string m = (p.dir / "diverged.bin").string();
  RunResult r = run("train --corpus " + q(p.corpus) + " --ref " + q(p.ref) +
                    " --prior " + q(p.prior) + " --embeddings " + q(p.embeddings) +
                    " --hidden 8 --epochs 3 --batch-size 4 --lr 1e308 --out " + q(m));
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("numerical error") != std::string::npos);
  CHECK(fs::exists(m));

  RunResult tw = run("top-words --model " + q(m) + " -n 2");
  CHECK(tw.exit_code == 0);  // the saved checkpoint is the last good state
}

TEST_CASE("mismatched prior and corpus exit 1") {
  Pipeline& p = pipeline();
  // prior built against a corpus with one extra document
  fs::path alt = p.dir / "alt";
  fs::create_directories(alt);
  std::ofstream jl(alt / "docs.jsonl");
  jl << json{{"id", "z9"}, {"text", "apple banana cherry"}, {"label", "alpha"}}.dump()
     << "\n";
  std::ifstream orig(p.dir / "docs.jsonl");
  jl << orig.rdbuf();
  jl.close();

  std::string alt_corpus = (alt / "corpus").string();
  REQUIRE(run("preprocess --input " + q((alt / "docs.jsonl").string()) + " --out " +
              q(alt_corpus) + " --min-count 1 --max-df 1.0")
              .exit_code == 0);
  std::ofstream sc(alt / "scores.csv");
  sc << "doc_id,alpha,beta\nz9,0.9,0.1\n";
  for (int i = 0; i < 6; ++i) {
    sc << "a" << i << ",0.9,0.1\n";
    sc << "b" << i << ",0.1,0.9\n";
  }
  sc.close();
  std::string alt_prior = (alt / "prior.json").string();
  REQUIRE(run("gen-prior --corpus " + q(alt_corpus) + " --ref " + q(p.ref) +
              " --scores " + q((alt / "scores.csv").string()) + " --out " +
              q(alt_prior))
              .exit_code == 0);

  RunResult r = run("train --corpus " + q(p.corpus) + " --ref " + q(p.ref) +
                    " --prior " + q(alt_prior) + " --embeddings " + q(p.embeddings) +
                    " --hidden 8 --epochs 2 --batch-size 4 --out " +
                    q((p.dir / "mm.bin").string()));
  CHECK(r.exit_code == 1);
  CHECK(r.err.find("validation error") != std::string::npos);
}

TEST_CASE("unknown score document names the offender and exits 1") {
  Pipeline& p = pipeline();
  fs::path bad = work_dir() / "bad_scores.csv";
  std::ofstream sc(bad);
  sc << "doc_id,alpha,beta\nghost,0.9,0.1\n";
  sc.close();
  RunResult r = run("gen-prior --corpus " + q(p.corpus) + " --ref " + q(p.ref) +
                    " --scores " + q(bad.string()) + " --out " +
                    q((work_dir() / "bad_prior.json").string()));
  CHECK(r.exit_code == 1);
  CHECK(r.err.find("ghost") != std::string::npos);
}

TEST_CASE("config file supplies defaults and flags override it") {
  Pipeline& p = pipeline();
  fs::path cfg = work_dir() / "run.toml";
  std::ofstream f(cfg);
  f << "[train-reference]\n"
    << "iters = 40\n"
    << "burn-in = 20\n"
    << "seed = 9\n";
  f.close();

  std::string ref_a = (work_dir() / "ref_cfg.json").string();
  RunResult r = run("--config " + q(cfg.string()) + " train-reference --corpus " +
                    q(p.corpus) + " --topics \"alpha,beta\" --out " + q(ref_a));
  REQUIRE(r.exit_code == 0);
  json meta = json::parse(slurp(ref_a))["_meta"];
  CHECK(meta["config"]["iters"] == 40);
  CHECK(meta["config"]["burn_in"] == 20);
  CHECK(meta["seed"] == 9);

  // explicit flag wins over the config value
  std::string ref_b = (work_dir() / "ref_cfg2.json").string();
  r = run("--config " + q(cfg.string()) + " train-reference --corpus " +
          q(p.corpus) + " --topics \"alpha,beta\" --iters 80 --out " + q(ref_b));
  REQUIRE(r.exit_code == 0);
  CHECK(json::parse(slurp(ref_b))["_meta"]["config"]["iters"] == 80);
}

TEST_CASE("gen-prior rejects ambiguous score sources") {
  Pipeline& p = pipeline();
  RunResult r = run("gen-prior --corpus " + q(p.corpus) + " --ref " + q(p.ref) +
                    " --out " + q((work_dir() / "x.json").string()));
  CHECK(r.exit_code == 1);
  r = run("gen-prior --corpus " + q(p.corpus) + " --ref " + q(p.ref) +
          " --scores " + q(p.scores) + " --proxy --out " +
          q((work_dir() / "x.json").string()));
  CHECK(r.exit_code == 1);
}

TEST_CASE("gen-prior proxy mode works from embeddings alone") {
  Pipeline& p = pipeline();
  std::string out = (work_dir() / "proxy_prior.json").string();
  RunResult r = run("gen-prior --corpus " + q(p.corpus) + " --ref " + q(p.ref) +
                    " --proxy --embeddings " + q(p.embeddings) + " --out " + q(out));
  REQUIRE(r.exit_code == 0);
  json pj = json::parse(slurp(out));
  CHECK(pj["rows"].size() == 12);
}

TEST_CASE("demo is deterministic end to end") {
  fs::path d1 = work_dir() / "demo_a";
  fs::path d2 = work_dir() / "demo_b";
  RunResult r1 = run("demo --seed 11 --dir " + q(d1.string()));
  REQUIRE(r1.exit_code == 0);
  RunResult r2 = run("demo --seed 11 --dir " + q(d2.string()));
  REQUIRE(r2.exit_code == 0);

  CHECK(r1.out == r2.out);
  CHECK(slurp(d1 / "model.bin") == slurp(d2 / "model.bin"));
  CHECK(slurp(d1 / "report.json") == slurp(d2 / "report.json"));
  CHECK(slurp(d1 / "theta.csv") == slurp(d2 / "theta.csv"));

  json rep = json::parse(r1.out);
  CHECK(rep["accuracy"].get<double>() >= 0.9);
}
