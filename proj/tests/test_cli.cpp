#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const std::string kTool = XLP_TOOL_PATH;
const fs::path kData = XLP_TEST_DATA_DIR;

struct RunResult {
  int exit_code = -1;
  std::string output;
};

RunResult run(const std::string& args) {
  const fs::path log = fs::temp_directory_path() / "xlp_cli_out.txt";
  const std::string cmd = kTool + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  std::ostringstream buf;
  buf << in.rdbuf();
  r.output = buf.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  out << content;
}

const char* kToyTreebank =
    "1\tthe\t_\tDET\t_\t_\t2\tdet\t_\t_\n"
    "2\tcat\t_\tNOUN\t_\t_\t3\tnsubj\t_\t_\n"
    "3\tsat\t_\tVERB\t_\t_\t0\troot\t_\t_\n"
    "\n"
    "1\tdogs\t_\tNOUN\t_\t_\t2\tnsubj\t_\t_\n"
    "2\trun\t_\tVERB\t_\t_\t0\troot\t_\t_\n"
    "\n";

}  // namespace

TEST_CASE("cli: typology distance matches the hand oracle for two toy languages") {
  const fs::path out = fresh_dir("xlp_cli_typo2");
  const RunResult r = run("typology distance --treebanks " + (kData / "typology3").string() +
                          " --langs aa,bb --split train --min-avg-freq 0.0 --min-langs 1 --out " +
                          out.string());
  REQUIRE(r.exit_code == 0);
  const std::string dm = slurp(out / "distance.tsv");
  // aa and bb share (DET,NOUN,det) and (NOUN,VERB,nsubj); aa lacks obj, bb
  // lacks amod, both imputed at 0.5: distance = |0.5-0| + |1-0.5| = 1.0
  CHECK(dm.find("language\taa\tbb") == 0);
  CHECK(dm.find("aa\t0.000000\t1.000000") != std::string::npos);
  CHECK(dm.find("bb\t1.000000\t0.000000") != std::string::npos);
  CHECK(fs::exists(out / "manifest.json"));
}

TEST_CASE("cli: typology runs are byte-reproducible") {
  const fs::path out1 = fresh_dir("xlp_cli_rep1");
  const fs::path out2 = fresh_dir("xlp_cli_rep2");
  const std::string base = "typology cluster --treebanks " + (kData / "typology3").string() +
                           " --langs aa,bb,cc --split train --min-avg-freq 0.0 --min-langs 2 --out ";
  REQUIRE(run(base + out1.string()).exit_code == 0);
  REQUIRE(run(base + out2.string()).exit_code == 0);
  for (const char* name : {"vectors.tsv", "imputed.tsv", "distance.tsv", "dendrogram.tsv",
                           "dendrogram.nwk"})
    CHECK(slurp(out1 / name) == slurp(out2 / name));
}

TEST_CASE("cli: eval of identical files reports UAS=LAS=1.0000") {
  const fs::path dir = fresh_dir("xlp_cli_eval");
  write_file(dir / "gold.conllu", kToyTreebank);
  const RunResult r = run("eval --pred " + (dir / "gold.conllu").string() + " --gold " +
                          (dir / "gold.conllu").string() + " --out " + (dir / "out").string());
  REQUIRE(r.exit_code == 0);
  CHECK(r.output.find("UAS=1.0000 LAS=1.0000") != std::string::npos);
  CHECK(slurp(dir / "out" / "report.tsv").find("uas\t1.0000") != std::string::npos);
  CHECK(slurp(dir / "out" / "report.json").find("\"las\": 1.0000") != std::string::npos);
}

TEST_CASE("cli: gradcheck passes for one architecture and exits 0") {
  const RunResult r = run("gradcheck --arch selfatt-graph");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("max relative error") != std::string::npos);
  CHECK(r.output.find("[ok]") != std::string::npos);
}

TEST_CASE("cli: gradcheck with an impossible tolerance exits 2") {
  const RunResult r = run("gradcheck --arch rnn-graph --tolerance 1e-18");
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("[FAIL]") != std::string::npos);
}

TEST_CASE("cli: bad inputs exit 1 with a diagnostic") {
  SUBCASE("missing treebank directory") {
    const fs::path out = fresh_dir("xlp_cli_bad1");
    const RunResult r = run("typology distance --treebanks /nonexistent --langs aa,bb --out " +
                            out.string());
    CHECK(r.exit_code == 1);
    CHECK(r.output.find("error:") != std::string::npos);
  }
  SUBCASE("malformed conllu") {
    const fs::path dir = fresh_dir("xlp_cli_bad2");
    write_file(dir / "bad.conllu", "1\tonly\tthree\n");
    const RunResult r = run("eval --pred " + (dir / "bad.conllu").string() + " --gold " +
                            (dir / "bad.conllu").string() + " --out " + (dir / "out").string());
    CHECK(r.exit_code == 1);
    CHECK(r.output.find("error:") != std::string::npos);
    CHECK(r.output.find("sentence 1") != std::string::npos);
  }
  SUBCASE("unknown architecture") {
    const fs::path dir = fresh_dir("xlp_cli_bad3");
    write_file(dir / "t.conllu", kToyTreebank);
    const RunResult r = run("train --train " + (dir / "t.conllu").string() +
                            " --arch eisner --delexicalized --out " + (dir / "out").string());
    CHECK(r.exit_code == 1);
    CHECK(r.output.find("unknown architecture") != std::string::npos);
  }
  SUBCASE("usage errors also exit 1") {
    const RunResult r = run("typology distance --langs aa");  // missing required options
    CHECK(r.exit_code == 1);
    const RunResult unknown = run("frobnicate");
    CHECK(unknown.exit_code == 1);
  }
}

TEST_CASE("cli: train writes per-seed checkpoints, logs, summary, and manifest") {
  const fs::path dir = fresh_dir("xlp_cli_train");
  write_file(dir / "train.conllu", kToyTreebank);
  const RunResult r =
      run("train --train " + (dir / "train.conllu").string() +
          " --lang xx --delexicalized --arch rnn-stack --seeds 3,4 --epochs 2 --batch 2" +
          " --lr 1e-3 --d-model 12 --word-dim 8 --pos-dim 4 --rnn-hidden 5 --layers 1" +
          " --arc-mlp 8 --label-mlp 5 --dec-hidden 6 --ptr-mlp 8 --out " +
          (dir / "out").string());
  REQUIRE(r.exit_code == 0);
  for (const char* name : {"model_seed3.ckpt", "model_seed3.json", "log_seed3.tsv",
                           "model_seed4.ckpt", "model_seed4.json", "log_seed4.tsv",
                           "summary.tsv", "manifest.json"})
    CHECK(fs::exists(dir / "out" / name));
  CHECK(slurp(dir / "out" / "summary.tsv").find("uas\t") != std::string::npos);
  CHECK(r.output.find("mean over 2 seed(s)") != std::string::npos);

  SUBCASE("parse consumes the checkpoint and emits valid conllu") {
    const RunResult p = run("parse --model " + (dir / "out" / "model_seed3.ckpt").string() +
                            " --input " + (dir / "train.conllu").string() + " --out " +
                            (dir / "parsed").string());
    REQUIRE(p.exit_code == 0);
    const RunResult e = run("eval --pred " + (dir / "parsed" / "pred.conllu").string() +
                            " --gold " + (dir / "train.conllu").string() + " --out " +
                            (dir / "scored").string());
    CHECK(e.exit_code == 0);
    CHECK(e.output.find("UAS=") != std::string::npos);
  }
}

TEST_CASE("cli: train consumes a word-vector file and checks its width") {
  const fs::path dir = fresh_dir("xlp_cli_emb");
  write_file(dir / "train.conllu", kToyTreebank);
  write_file(dir / "vec.txt",
             "4 6\n"
             "the 0.1 0.2 0.3 -0.1 0.0 0.2\n"
             "cat 0.5 -0.2 0.1 0.4 -0.3 0.1\n"
             "sat -0.4 0.3 0.2 -0.2 0.5 0.0\n"
             "run -0.1 -0.4 0.2 0.5 0.2 0.3\n");
  const std::string base = "train --train " + (dir / "train.conllu").string() +
                           " --embeddings " + (dir / "vec.txt").string() +
                           " --arch selfatt-graph --seeds 1 --epochs 1 --batch 2" +
                           " --heads 2 --layers 1 --d-ff 16 --clip-k 3 --arc-mlp 8" +
                           " --label-mlp 5 --d-model 12 ";
  const RunResult ok =
      run(base + "--word-dim 6 --pos-dim 6 --out " + (dir / "out").string());
  CHECK(ok.exit_code == 0);
  const RunResult bad =
      run(base + "--word-dim 8 --pos-dim 4 --out " + (dir / "bad").string());
  CHECK(bad.exit_code == 1);
  CHECK(bad.output.find("does not match word_dim") != std::string::npos);
}

TEST_CASE("cli: same-seed training runs produce byte-identical checkpoints") {
  const fs::path dir = fresh_dir("xlp_cli_det");
  write_file(dir / "train.conllu", kToyTreebank);
  const std::string base =
      "train --train " + (dir / "train.conllu").string() +
      " --lang xx --delexicalized --arch selfatt-graph --seeds 5 --epochs 2 --batch 2" +
      " --d-model 12 --word-dim 8 --pos-dim 4 --heads 2 --layers 1 --d-ff 16 --clip-k 3" +
      " --arc-mlp 8 --label-mlp 5 --out ";
  REQUIRE(run(base + (dir / "a").string()).exit_code == 0);
  REQUIRE(run(base + (dir / "b").string()).exit_code == 0);
  CHECK(slurp(dir / "a" / "model_seed5.ckpt") == slurp(dir / "b" / "model_seed5.ckpt"));
  CHECK(slurp(dir / "a" / "summary.tsv") == slurp(dir / "b" / "summary.tsv"));
}

TEST_CASE("cli: the transfer protocol chains across subcommands") {
  // Miniature end-to-end run: typology distances over three toy languages,
  // a delexicalized model trained on one of them, zero-shot parses of the
  // others, and the performance-vs-distance correlation at the end.
  const fs::path dir = fresh_dir("xlp_cli_protocol");
  const std::string data = (kData / "typology3").string();

  REQUIRE(run("typology distance --treebanks " + data +
              " --langs aa,bb,cc --min-avg-freq 0.0 --min-langs 2 --out " +
              (dir / "typo").string())
              .exit_code == 0);

  REQUIRE(run("train --train " + data + "/aa/train.conllu --lang aa --delexicalized" +
              " --arch selfatt-graph --seeds 1 --epochs 120 --batch 2 --lr 2e-3" +
              " --d-model 12 --word-dim 8 --pos-dim 4 --heads 2 --layers 1 --d-ff 16" +
              " --clip-k 3 --arc-mlp 8 --label-mlp 5 --out " + (dir / "model").string())
              .exit_code == 0);

  std::string pairs = "lang\tx\ty\n";
  for (const std::string lang : {"aa", "bb", "cc"}) {
    REQUIRE(run("parse --model " + (dir / "model" / "model_seed1.ckpt").string() +
                " --input " + data + "/" + lang + "/train.conllu --out " +
                (dir / ("parse_" + lang)).string())
                .exit_code == 0);
    const RunResult e = run("eval --pred " + (dir / ("parse_" + lang) / "pred.conllu").string() +
                            " --gold " + data + "/" + lang + "/train.conllu --out " +
                            (dir / ("eval_" + lang)).string());
    REQUIRE(e.exit_code == 0);
    const std::string report = slurp(dir / ("eval_" + lang) / "report.tsv");
    const auto value_of = [&](const std::string& key) {
      const std::size_t at = report.find(key + "\t");
      return std::stod(report.substr(at + key.size() + 1));
    };
    const double score = 0.5 * (value_of("uas") + value_of("las"));
    // distance to the source language from the typology matrix
    const std::string dm = slurp(dir / "typo" / "distance.tsv");
    std::istringstream lines(dm);
    std::string line;
    std::getline(lines, line);  // header: language aa bb cc
    double distance = 0.0;
    while (std::getline(lines, line)) {
      if (line.rfind("aa\t", 0) == 0) {
        std::istringstream row(line);
        std::string cell;
        std::getline(row, cell, '\t');
        for (const std::string l2 : {"aa", "bb", "cc"}) {
          std::getline(row, cell, '\t');
          if (l2 == lang) distance = std::stod(cell);
        }
      }
    }
    pairs += lang + "\t" + std::to_string(distance) + "\t" + std::to_string(score) + "\n";
  }
  write_file(dir / "pairs.tsv", pairs);

  const RunResult c = run("analyze correlate --pairs " + (dir / "pairs.tsv").string() +
                          " --out " + (dir / "corr").string());
  REQUIRE(c.exit_code == 0);
  const std::string corr = slurp(dir / "corr" / "correlation.json");
  CHECK(corr.find("\"pearson\":") != std::string::npos);
  CHECK(corr.find("\"n\": 3") != std::string::npos);

  // the supervised language must fit its own two sentences perfectly
  CHECK(slurp(dir / "eval_aa" / "report.tsv").find("uas\t1.0000") != std::string::npos);
}

TEST_CASE("cli: train flags override the JSON config") {
  const fs::path dir = fresh_dir("xlp_cli_cfg");
  write_file(dir / "train.conllu", kToyTreebank);
  write_file(dir / "cfg.json", std::string("{\n") +
                                   "  \"train\": \"" + (dir / "train.conllu").string() + "\",\n" +
                                   "  \"architecture\": \"selfatt-graph\",\n" +
                                   "  \"delexicalized\": true,\n" +
                                   "  \"epochs\": 1,\n  \"batch_size\": 2,\n" +
                                   "  \"d_model\": 12, \"word_dim\": 8, \"pos_dim\": 4,\n" +
                                   "  \"heads\": 2, \"layers\": 1, \"d_ff\": 16, \"clip_k\": 3,\n" +
                                   "  \"arc_mlp\": 8, \"label_mlp\": 5,\n" +
                                   "  \"seeds\": [9]\n}\n");
  const RunResult r = run("train --config " + (dir / "cfg.json").string() + " --out " +
                          (dir / "out").string());
  REQUIRE(r.exit_code == 0);
  CHECK(fs::exists(dir / "out" / "model_seed9.ckpt"));
  const std::string manifest = slurp(dir / "out" / "manifest.json");
  CHECK(manifest.find("\"architecture\": \"selfatt-graph\"") != std::string::npos);
  CHECK(manifest.find("\"config_hash\"") != std::string::npos);

  SUBCASE("explicit flags beat config values") {
    const RunResult o = run("train --config " + (dir / "cfg.json").string() +
                            " --seeds 11 --epochs 2 --out " + (dir / "out2").string());
    REQUIRE(o.exit_code == 0);
    CHECK(fs::exists(dir / "out2" / "model_seed11.ckpt"));
    CHECK_FALSE(fs::exists(dir / "out2" / "model_seed9.ckpt"));
    CHECK(slurp(dir / "out2" / "manifest.json").find("\"epochs\": 2") != std::string::npos);
  }
}
