// xlp: cross-lingual dependency parsing toolkit.
//
// Subcommands: typology {vectors,distance,cluster,depdist}, train, parse,
// eval, analyze {correlate,contrast,pairs}, gradcheck. Machine-readable
// outputs always go under --out; stdout carries short human summaries.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "xlp/analysis.hpp"
#include "xlp/conllu.hpp"
#include "xlp/decoder.hpp"
#include "xlp/evaluation.hpp"
#include "xlp/io.hpp"
#include "xlp/model.hpp"
#include "xlp/training.hpp"
#include "xlp/typology.hpp"
#include "xlp/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace xlp;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;      // bad config or data
constexpr int kExitViolation = 2;  // invariant violation (e.g. failed grad check)

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

void write_manifest(const fs::path& out_dir, const std::string& command, const json& config) {
  json manifest;
  manifest["tool"] = "xlp";
  manifest["version"] = kVersion;
  manifest["command"] = command;
  manifest["config"] = config;
  char hash[32];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(fnv1a64(config.dump())));
  manifest["config_hash"] = hash;
  write_text_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
}

fs::path ensure_out_dir(const std::string& out) {
  if (out.empty()) throw std::runtime_error("an --out directory is required");
  fs::path dir(out);
  fs::create_directories(dir);
  return dir;
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t comma = s.find(',', start);
    if (comma == std::string::npos) {
      if (start < s.size()) parts.push_back(s.substr(start));
      break;
    }
    if (comma > start) parts.push_back(s.substr(start, comma - start));
    start = comma + 1;
  }
  return parts;
}

// ---------------------------------------------------------------------------
// typology

struct TypologyArgs {
  std::string treebanks;
  std::string langs;
  std::string split = "train";
  double min_avg_freq = 0.001;
  int min_langs = 20;
  std::string out;
};

std::map<std::string, Treebank> load_treebanks(const TypologyArgs& args) {
  const std::vector<std::string> langs = split_csv(args.langs);
  if (langs.empty()) throw std::runtime_error("--langs must name at least one language");
  std::map<std::string, Treebank> tbs;
  for (const std::string& lang : langs) {
    const fs::path path = fs::path(args.treebanks) / lang / (args.split + ".conllu");
    tbs.emplace(lang, read_treebank_file(path, lang));
  }
  return tbs;
}

json typology_config(const TypologyArgs& args) {
  return json{{"treebanks", args.treebanks}, {"langs", args.langs},     {"split", args.split},
              {"min_avg_freq", args.min_avg_freq}, {"min_langs", args.min_langs},
              {"out", args.out}};
}

struct TypologyData {
  TypeSelection selection;
  std::vector<WordOrderVector> vectors;
};

TypologyData typology_vectors_of(const std::map<std::string, Treebank>& tbs,
                                 const TypologyArgs& args) {
  std::map<std::string, TypeStats> stats;
  for (const auto& [lang, tb] : tbs) stats.emplace(lang, collect_type_stats(tb));
  TypologyData data;
  data.selection = select_types(stats, args.min_avg_freq, args.min_langs);
  if (data.selection.types.empty())
    throw std::runtime_error("type selection is empty; relax --min-avg-freq/--min-langs");
  for (const auto& [lang, st] : stats)
    data.vectors.push_back(order_vector(st, lang, data.selection));
  return data;
}

int run_typology(const std::string& mode, const TypologyArgs& args) {
  const fs::path out = ensure_out_dir(args.out);
  const auto tbs = load_treebanks(args);

  if (mode == "depdist") {
    std::map<std::string, DepDistHistogram> hist;
    for (const auto& [lang, tb] : tbs) hist.emplace(lang, dep_distance_histogram(tb));
    write_text_file(out / "depdist.tsv", depdist_tsv(hist));
    std::cout << "wrote " << (out / "depdist.tsv").string() << " for " << hist.size()
              << " language(s)\n";
  } else {
    const TypologyData data = typology_vectors_of(tbs, args);
    write_text_file(out / "vectors.tsv", vectors_tsv(data.vectors, data.selection));
    write_text_file(out / "imputed.tsv", imputed_tsv(data.vectors, data.selection));
    std::cout << "selected " << data.selection.types.size() << " augmented types over "
              << data.vectors.size() << " language(s)\n";
    if (mode == "distance" || mode == "cluster") {
      const DistanceMatrix dm = distance_matrix(data.vectors);
      write_text_file(out / "distance.tsv", distance_matrix_tsv(dm));
      std::cout << "wrote " << (out / "distance.tsv").string() << "\n";
      if (mode == "cluster") {
        const Dendrogram dendro = cluster_single_linkage(dm);
        write_text_file(out / "dendrogram.tsv", dendrogram_tsv(dendro));
        write_text_file(out / "dendrogram.nwk", dendro.newick() + "\n");
        std::cout << "wrote " << (out / "dendrogram.nwk").string() << "\n";
      }
    }
  }
  write_manifest(out, "typology " + mode, typology_config(args));
  return kExitOk;
}

// ---------------------------------------------------------------------------
// model construction shared by train / parse / gradcheck

struct ModelArgs {
  std::string arch;  // post-merge default: selfatt-graph
  std::string variant;  // relative (default), relative-dir, absolute, noposi
  bool delexicalized = false;
  int layers = -1;
  int d_model = -1;
  int heads = -1;
  int d_ff = -1;
  int clip_k = -1;
  int rnn_hidden = -1;
  int word_dim = -1;
  int pos_dim = -1;
  int arc_mlp = -1;
  int label_mlp = -1;
  int dec_hidden = -1;
  int ptr_mlp = -1;
  double dropout = -1.0;
};

EncoderVariant variant_of(const std::string& arch, const std::string& variant) {
  if (arch.rfind("rnn", 0) == 0) return EncoderVariant::Rnn;
  if (variant.empty() || variant == "relative") return EncoderVariant::SelfAttRelative;
  if (variant == "relative-dir") return EncoderVariant::SelfAttRelativeDir;
  if (variant == "absolute") return EncoderVariant::SelfAttAbsolute;
  if (variant == "noposi") return EncoderVariant::SelfAttNoPosi;
  throw std::runtime_error("unknown encoder variant '" + variant + "'");
}

ModelConfig model_config_of(const ModelArgs& args) {
  const EncoderVariant enc = variant_of(args.arch, args.variant);
  DecoderKind dec;
  if (args.arch == "selfatt-graph" || args.arch == "rnn-graph")
    dec = DecoderKind::Graph;
  else if (args.arch == "selfatt-stack" || args.arch == "rnn-stack")
    dec = DecoderKind::StackPtr;
  else
    throw std::runtime_error("unknown architecture '" + args.arch +
                             "' (expected selfatt-graph, rnn-graph, selfatt-stack, rnn-stack)");
  ModelConfig cfg = ModelConfig::make(enc, dec);
  cfg.delexicalized = args.delexicalized;
  if (args.layers > 0) cfg.encoder.layers = args.layers;
  if (args.d_model > 0) cfg.encoder.d_model = args.d_model;
  if (args.heads > 0) cfg.encoder.heads = args.heads;
  if (args.d_ff > 0) cfg.encoder.d_ff = args.d_ff;
  if (args.clip_k > 0) cfg.encoder.clip_k = args.clip_k;
  if (args.rnn_hidden > 0) cfg.encoder.rnn_hidden = args.rnn_hidden;
  if (args.word_dim > 0) cfg.encoder.word_dim = args.word_dim;
  if (args.pos_dim > 0) cfg.encoder.pos_dim = args.pos_dim;
  if (args.arc_mlp > 0) cfg.arc_mlp = args.arc_mlp;
  if (args.label_mlp > 0) cfg.label_mlp = args.label_mlp;
  if (args.dec_hidden > 0) cfg.dec_hidden = args.dec_hidden;
  if (args.ptr_mlp > 0) cfg.ptr_mlp = args.ptr_mlp;
  if (args.dropout >= 0.0) cfg.encoder.dropout = args.dropout;
  cfg.encoder.validate();
  return cfg;
}

json model_config_json(const ModelConfig& cfg) {
  return json{{"architecture", cfg.arch_name()},
              {"encoder_variant", encoder_variant_name(cfg.encoder.variant)},
              {"layers", cfg.encoder.layers},
              {"d_model", cfg.encoder.d_model},
              {"heads", cfg.encoder.heads},
              {"d_ff", cfg.encoder.d_ff},
              {"clip_k", cfg.encoder.clip_k},
              {"rnn_hidden", cfg.encoder.rnn_hidden},
              {"word_dim", cfg.encoder.word_dim},
              {"pos_dim", cfg.encoder.pos_dim},
              {"dropout", cfg.encoder.dropout},
              {"arc_mlp", cfg.arc_mlp},
              {"label_mlp", cfg.label_mlp},
              {"dec_hidden", cfg.dec_hidden},
              {"ptr_mlp", cfg.ptr_mlp},
              {"delexicalized", cfg.delexicalized}};
}

ModelConfig model_config_from_json(const json& j) {
  ModelArgs args;
  args.arch = j.at("architecture").get<std::string>();
  const std::string variant = j.at("encoder_variant").get<std::string>();
  if (variant == "selfatt-relative") args.variant = "relative";
  else if (variant == "selfatt-relative-dir") args.variant = "relative-dir";
  else if (variant == "selfatt-absolute") args.variant = "absolute";
  else if (variant == "selfatt-noposi") args.variant = "noposi";
  args.delexicalized = j.at("delexicalized").get<bool>();
  args.layers = j.at("layers").get<int>();
  args.d_model = j.at("d_model").get<int>();
  args.heads = j.at("heads").get<int>();
  args.d_ff = j.at("d_ff").get<int>();
  args.clip_k = j.at("clip_k").get<int>();
  args.rnn_hidden = j.at("rnn_hidden").get<int>();
  args.word_dim = j.at("word_dim").get<int>();
  args.pos_dim = j.at("pos_dim").get<int>();
  args.arc_mlp = j.at("arc_mlp").get<int>();
  args.label_mlp = j.at("label_mlp").get<int>();
  args.dec_hidden = j.at("dec_hidden").get<int>();
  args.ptr_mlp = j.at("ptr_mlp").get<int>();
  args.dropout = j.at("dropout").get<double>();
  return model_config_of(args);
}

Parser<float> build_parser(const ModelConfig& cfg, const std::string& embeddings_path,
                           const Vocabulary& labels, std::uint64_t seed) {
  std::vector<std::string> words;
  std::vector<float> matrix;
  if (!cfg.delexicalized && !embeddings_path.empty()) {
    const WordEmbeddings emb = WordEmbeddings::load(embeddings_path);
    if (static_cast<int>(emb.dim) != cfg.encoder.word_dim)
      throw std::runtime_error("embedding dimension " + std::to_string(emb.dim) +
                               " does not match word_dim " +
                               std::to_string(cfg.encoder.word_dim));
    words = emb.words;
    matrix = emb.matrix;
  } else if (!cfg.delexicalized) {
    throw std::runtime_error("--embeddings is required unless --delexicalized is set");
  }
  return Parser<float>(cfg, words, matrix, Vocabulary::universal_pos(), labels, seed);
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string config;
  std::string train_path;
  std::string dev_path;
  std::string language;  // post-merge default: xx
  std::string embeddings;
  std::string seeds;  // post-merge default: 1
  int epochs = -1;
  int batch_size = -1;
  double learning_rate = -1.0;
  int max_len = -1;
  std::string out;
  ModelArgs model;
};

void apply_config_file(TrainArgs& args) {
  if (args.config.empty()) return;
  const json j = json::parse(read_text_file(args.config));
  // Flags override the config file, so only fill fields still at defaults.
  const auto set_str = [&](const char* key, std::string& slot, const std::string& dflt) {
    if (j.contains(key) && slot == dflt) slot = j.at(key).get<std::string>();
  };
  set_str("train", args.train_path, "");
  set_str("dev", args.dev_path, "");
  set_str("language", args.language, "");
  set_str("embeddings", args.embeddings, "");
  set_str("out", args.out, "");
  set_str("architecture", args.model.arch, "");
  set_str("encoder_variant", args.model.variant, "");
  if (j.contains("seeds") && args.seeds.empty()) {
    std::string seeds;
    for (const auto& s : j.at("seeds")) seeds += (seeds.empty() ? "" : ",") + std::to_string(s.get<int>());
    args.seeds = seeds;
  }
  if (j.contains("delexicalized") && !args.model.delexicalized)
    args.model.delexicalized = j.at("delexicalized").get<bool>();
  const auto set_int = [&](const char* key, int& slot) {
    if (j.contains(key) && slot < 0) slot = j.at(key).get<int>();
  };
  set_int("epochs", args.epochs);
  set_int("batch_size", args.batch_size);
  set_int("max_sentence_length", args.max_len);
  set_int("layers", args.model.layers);
  set_int("d_model", args.model.d_model);
  set_int("heads", args.model.heads);
  set_int("d_ff", args.model.d_ff);
  set_int("clip_k", args.model.clip_k);
  set_int("rnn_hidden", args.model.rnn_hidden);
  set_int("word_dim", args.model.word_dim);
  set_int("pos_dim", args.model.pos_dim);
  set_int("arc_mlp", args.model.arc_mlp);
  set_int("label_mlp", args.model.label_mlp);
  set_int("dec_hidden", args.model.dec_hidden);
  set_int("ptr_mlp", args.model.ptr_mlp);
  if (j.contains("learning_rate") && args.learning_rate < 0)
    args.learning_rate = j.at("learning_rate").get<double>();
  if (j.contains("dropout") && args.model.dropout < 0)
    args.model.dropout = j.at("dropout").get<double>();
}

int run_train(TrainArgs& args) {
  apply_config_file(args);
  if (args.language.empty()) args.language = "xx";
  if (args.seeds.empty()) args.seeds = "1";
  if (args.model.arch.empty()) args.model.arch = "selfatt-graph";
  if (args.train_path.empty()) throw std::runtime_error("train: no --train treebank given");
  const fs::path out = ensure_out_dir(args.out);

  const ModelConfig cfg = model_config_of(args.model);
  TrainConfig tcfg = TrainConfig::for_encoder(cfg.encoder.variant);
  if (args.epochs >= 0) tcfg.epochs = args.epochs;
  if (args.batch_size > 0) tcfg.batch_size = args.batch_size;
  if (args.learning_rate > 0) tcfg.learning_rate = args.learning_rate;
  if (args.max_len > 0) tcfg.max_sentence_length = static_cast<std::size_t>(args.max_len);

  const Treebank train_tb = read_treebank_file(args.train_path, args.language);
  std::optional<Treebank> dev_tb;
  if (!args.dev_path.empty()) dev_tb = read_treebank_file(args.dev_path, args.language);

  const Vocabulary labels = Vocabulary::labels_from(train_tb);
  const std::vector<std::string> seed_strs = split_csv(args.seeds);
  if (seed_strs.empty()) throw std::runtime_error("train: --seeds must name at least one seed");

  json config = model_config_json(cfg);
  config["train"] = args.train_path;
  config["dev"] = args.dev_path;
  config["language"] = args.language;
  config["embeddings"] = args.embeddings;
  config["epochs"] = tcfg.epochs;
  config["batch_size"] = tcfg.batch_size;
  config["learning_rate"] = tcfg.learning_rate;
  config["max_sentence_length"] = tcfg.max_sentence_length;
  config["seeds"] = seed_strs;

  std::vector<double> final_uas, final_las;
  for (const std::string& seed_str : seed_strs) {
    const std::uint64_t seed = std::stoull(seed_str);
    tcfg.seed = seed;
    Parser<float> parser = build_parser(cfg, args.embeddings, labels, seed);
    const std::vector<EpochLog> log = train(parser, train_tb, dev_tb ? &*dev_tb : nullptr, tcfg);
    const std::string tag = "seed" + seed_str;
    parser.params().save(out / ("model_" + tag + ".ckpt"));
    json meta = model_config_json(cfg);
    meta["seed"] = seed;
    meta["language"] = args.language;
    meta["labels"] = parser.labels().items();
    meta["embeddings"] = args.embeddings;
    write_text_file(out / ("model_" + tag + ".json"), meta.dump(2) + "\n");
    write_text_file(out / ("log_" + tag + ".tsv"), training_log_tsv(log));

    const Treebank& eval_tb = dev_tb ? *dev_tb : train_tb;
    const EvalReport report = evaluate_model(parser, eval_tb);
    final_uas.push_back(report.uas);
    final_las.push_back(report.las);
    std::printf("seed %s: %s UAS=%.4f LAS=%.4f\n", seed_str.c_str(),
                dev_tb ? "dev" : "train", report.uas, report.las);
  }

  const auto mean_sd = [](const std::vector<double>& xs) {
    double mean = 0.0;
    for (const double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (const double x : xs) var += (x - mean) * (x - mean);
    var = xs.size() > 1 ? var / static_cast<double>(xs.size() - 1) : 0.0;
    return std::pair<double, double>(mean, std::sqrt(var));
  };
  const auto [uas_mean, uas_sd] = mean_sd(final_uas);
  const auto [las_mean, las_sd] = mean_sd(final_las);
  char buf[240];
  std::string summary = "metric\tmean\tsd\tn\n";
  std::snprintf(buf, sizeof(buf), "uas\t%.4f\t%.4f\t%zu\nlas\t%.4f\t%.4f\t%zu\n", uas_mean,
                uas_sd, final_uas.size(), las_mean, las_sd, final_las.size());
  summary += buf;
  write_text_file(out / "summary.tsv", summary);
  std::printf("mean over %zu seed(s): UAS=%.4f±%.4f LAS=%.4f±%.4f\n", final_uas.size(), uas_mean,
              uas_sd, las_mean, las_sd);
  write_manifest(out, "train", config);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// parse

int run_parse(const std::string& model_path, const std::string& input,
              const std::string& embeddings_override, const std::string& out_str,
              const std::string& name) {
  const fs::path out = ensure_out_dir(out_str);
  fs::path meta_path(model_path);
  meta_path.replace_extension(".json");
  const json meta = json::parse(read_text_file(meta_path));
  const ModelConfig cfg = model_config_from_json(meta);
  Vocabulary labels;
  for (const auto& l : meta.at("labels")) labels.add(l.get<std::string>());
  const std::string embeddings =
      !embeddings_override.empty() ? embeddings_override
                                   : meta.value("embeddings", std::string());
  Parser<float> parser = build_parser(cfg, embeddings, labels, meta.value("seed", 1ull));
  parser.params().load(model_path);

  const Treebank input_tb = read_treebank_file(input, meta.value("language", "xx"));
  Treebank pred = input_tb;
  for (Sentence& s : pred.sentences) {
    const ParseTree tree = parser.predict(s);
    for (std::size_t i = 0; i < s.size(); ++i) {
      s.tokens[i].head = tree.heads[i];
      s.tokens[i].deprel = tree.labels[i];
    }
  }
  refresh_counts(pred);
  write_treebank_file(pred, out / name);
  std::printf("parsed %zu sentence(s) -> %s\n", pred.sentences.size(), (out / name).c_str());
  write_manifest(out, "parse",
                 json{{"model", model_path}, {"input", input}, {"output", name}});
  return kExitOk;
}

// ---------------------------------------------------------------------------
// eval

int run_eval(const std::string& pred_path, const std::string& gold_path, bool include_punct,
             bool by_type, bool by_distance, const std::string& out_str) {
  const fs::path out = ensure_out_dir(out_str);
  const Treebank pred_tb = read_treebank_file(pred_path, "pred");
  const Treebank gold_tb = read_treebank_file(gold_path, "gold");
  std::vector<ParseTree> pred;
  pred.reserve(pred_tb.sentences.size());
  for (const Sentence& s : pred_tb.sentences) pred.push_back(tree_of(s));

  const EvalReport report = attachment_scores(pred, gold_tb.sentences, !include_punct);
  write_text_file(out / "report.tsv", report_tsv(report));

  std::optional<BreakdownReport> type_breakdown;
  std::optional<DistanceBreakdown> distance_breakdown;
  if (by_type) {
    type_breakdown = breakdown_by_type(pred, gold_tb.sentences);
    write_text_file(out / "breakdown_by_type.tsv", breakdown_tsv(*type_breakdown));
  }
  if (by_distance) {
    distance_breakdown = breakdown_by_distance(pred, gold_tb.sentences);
    write_text_file(out / "breakdown_by_distance.tsv",
                    distance_breakdown_tsv(*distance_breakdown));
  }
  write_text_file(out / "report.json",
                  report_json(report, type_breakdown ? &*type_breakdown : nullptr,
                              distance_breakdown ? &*distance_breakdown : nullptr));
  std::printf("UAS=%.4f LAS=%.4f evaluated_tokens=%zu punct_excluded=%d\n", report.uas,
              report.las, report.evaluated_tokens, report.punct_excluded ? 1 : 0);
  write_manifest(out, "eval",
                 json{{"pred", pred_path},
                      {"gold", gold_path},
                      {"include_punct", include_punct},
                      {"by_type", by_type},
                      {"by_distance", by_distance}});
  return kExitOk;
}

// ---------------------------------------------------------------------------
// analyze

std::vector<std::vector<std::string>> read_tsv(const fs::path& path) {
  const std::string text = read_text_file(path);
  std::vector<std::vector<std::string>> rows;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    std::string line = text.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) {
      std::vector<std::string> cells;
      std::size_t start = 0;
      while (true) {
        const std::size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
          cells.push_back(line.substr(start));
          break;
        }
        cells.push_back(line.substr(start, tab - start));
        start = tab + 1;
      }
      rows.push_back(std::move(cells));
    }
    pos = nl + 1;
  }
  return rows;
}

std::string correlation_json(const CorrelationReport& r) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "{\"pearson\": %.6f, \"spearman\": %.6f, \"n\": %zu}\n",
                r.pearson, r.spearman, r.n);
  return buf;
}

int run_analyze_correlate(const std::string& pairs_path, const std::string& x_col,
                          const std::string& y_col, const std::string& out_str) {
  const fs::path out = ensure_out_dir(out_str);
  const auto rows = read_tsv(pairs_path);
  if (rows.size() < 2) throw std::runtime_error("correlate: no data rows in " + pairs_path);
  const auto& header = rows.front();
  std::size_t xi = header.size(), yi = header.size();
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == x_col) xi = i;
    if (header[i] == y_col) yi = i;
  }
  if (xi == header.size() || yi == header.size())
    throw std::runtime_error("correlate: columns '" + x_col + "'/'" + y_col + "' not found");
  std::vector<double> xs, ys;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    xs.push_back(std::stod(rows[r].at(xi)));
    ys.push_back(std::stod(rows[r].at(yi)));
  }
  const CorrelationReport report = correlate(xs, ys);
  write_text_file(out / "correlation.json", correlation_json(report));
  std::printf("pearson=%.6f spearman=%.6f n=%zu\n", report.pearson, report.spearman, report.n);
  write_manifest(out, "analyze correlate",
                 json{{"pairs", pairs_path}, {"x", x_col}, {"y", y_col}});
  return kExitOk;
}

int run_analyze_contrast(const std::string& results_path, const std::string& distances_path,
                         const std::string& out_str) {
  const fs::path out = ensure_out_dir(out_str);
  const auto rows = read_tsv(results_path);
  if (rows.size() < 2) throw std::runtime_error("contrast: no data rows in " + results_path);
  std::map<std::string, std::map<std::string, double>> scores;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() < 3)
      throw std::runtime_error("contrast: expected columns language, architecture, score");
    scores[rows[r][0]][rows[r][1]] = std::stod(rows[r][2]);
  }
  std::optional<std::map<std::string, double>> distances;
  if (!distances_path.empty()) {
    const DistanceMatrix dm = read_distance_matrix_tsv(distances_path);
    // order by distance to the first language in the matrix
    distances.emplace();
    for (std::size_t j = 0; j < dm.languages.size(); ++j)
      (*distances)[dm.languages[j]] = dm.entries[0][j];
  }
  const auto contrast = component_contrast(scores, distances ? &*distances : nullptr);
  std::string tsv = "language\tencoder_diff\tdecoder_diff\n";
  char buf[160];
  for (const ContrastRow& row : contrast) {
    std::snprintf(buf, sizeof(buf), "%s\t%.6f\t%.6f\n", row.language.c_str(), row.encoder_diff,
                  row.decoder_diff);
    tsv += buf;
  }
  write_text_file(out / "contrast.tsv", tsv);
  std::printf("wrote contrast for %zu language(s)\n", contrast.size());
  write_manifest(out, "analyze contrast",
                 json{{"results", results_path}, {"distances", distances_path}});
  return kExitOk;
}

int run_analyze_pairs(const std::string& matrix_path, const std::string& distances_path,
                      const std::string& out_str) {
  const fs::path out = ensure_out_dir(out_str);
  const auto rows = read_tsv(matrix_path);
  if (rows.size() < 2) throw std::runtime_error("pairs: no data rows in " + matrix_path);
  TransferMatrix a;
  for (std::size_t i = 1; i < rows.front().size(); ++i) a.languages.push_back(rows.front()[i]);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    std::vector<double> vals;
    for (std::size_t c = 1; c < rows[r].size(); ++c) vals.push_back(std::stod(rows[r][c]));
    if (vals.size() != a.languages.size())
      throw std::runtime_error("pairs: ragged row in " + matrix_path);
    a.scores.push_back(std::move(vals));
  }
  const DistanceMatrix dm = read_distance_matrix_tsv(distances_path);
  const TransferSummary summary = transfer_summaries(a, dm);

  std::string tsv = "language\tas_source\tas_target\tmean_distance\n";
  std::string long_tsv = "language\tdistance\tmetric\tvalue\n";
  char buf[240];
  for (std::size_t i = 0; i < summary.languages.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%s\t%.6f\t%.6f\t%.6f\n", summary.languages[i].c_str(),
                  summary.as_source[i], summary.as_target[i], summary.mean_distance[i]);
    tsv += buf;
    std::snprintf(buf, sizeof(buf), "%s\t%.6f\tas_source\t%.6f\n%s\t%.6f\tas_target\t%.6f\n",
                  summary.languages[i].c_str(), summary.mean_distance[i], summary.as_source[i],
                  summary.languages[i].c_str(), summary.mean_distance[i], summary.as_target[i]);
    long_tsv += buf;
  }
  write_text_file(out / "pairs_summary.tsv", tsv);
  write_text_file(out / "pairs_long.tsv", long_tsv);
  write_text_file(out / "as_source_correlation.json",
                  correlation_json(summary.source_correlation));
  write_text_file(out / "as_target_correlation.json",
                  correlation_json(summary.target_correlation));
  std::printf("as-source r=%.4f, as-target r=%.4f against mean language distance\n",
              summary.source_correlation.pearson, summary.target_correlation.pearson);
  write_manifest(out, "analyze pairs",
                 json{{"matrix", matrix_path}, {"distances", distances_path}});
  return kExitOk;
}

// ---------------------------------------------------------------------------
// gradcheck

int run_gradcheck(const std::string& arch, double eps, double tolerance,
                  const std::string& out_str) {
  const std::vector<std::string> all = {"selfatt-graph", "rnn-graph", "selfatt-stack",
                                        "rnn-stack"};
  std::vector<std::string> archs = arch == "all" ? all : std::vector<std::string>{arch};

  std::string tsv = "architecture\tmax_rel_error\n";
  bool ok = true;
  for (const std::string& name : archs) {
    ModelArgs margs;
    margs.arch = name;
    margs.delexicalized = true;
    margs.layers = 1;
    margs.d_model = 12;
    margs.heads = 2;
    margs.d_ff = 16;
    margs.clip_k = 3;
    margs.rnn_hidden = 6;
    margs.word_dim = 8;
    margs.pos_dim = 4;
    margs.arc_mlp = 10;
    margs.label_mlp = 6;
    margs.dec_hidden = 8;
    margs.ptr_mlp = 10;
    const ModelConfig cfg = model_config_of(margs);

    Vocabulary labels;
    for (const char* l : {"root", "nsubj", "obj", "amod"}) labels.add(l);
    Parser<double> parser(cfg, {}, {}, Vocabulary::universal_pos(), labels, 4);
    // Evaluate derivatives away from the tiny-init region so central
    // differences are not dominated by roundoff.
    Rng point(2027);
    for (auto& e : parser.params().entries())
      for (auto& v : e->tensor.value.v)
        v = (point.bernoulli(0.5) ? 1.0 : -1.0) * point.uniform(0.1, 0.6);

    Sentence s1;
    s1.tokens = {{1, "a", "NOUN", 2, "nsubj"}, {2, "b", "VERB", 0, "root"},
                 {3, "c", "ADJ", 2, "amod"}};
    Sentence s2;
    s2.tokens = {{1, "d", "DET", 2, "amod"}, {2, "e", "NOUN", 3, "nsubj"},
                 {3, "f", "VERB", 0, "root"}, {4, "g", "NOUN", 3, "obj"}};
    const auto loss = [&](bool with_grad) {
      Graph<double> g;
      Rng rng(1);
      const Var<double> l = parser.batch_loss(g, {&s1, &s2}, false, rng);
      const double value = l.value().v[0];
      if (with_grad) g.backward(l);
      return value;
    };
    const double max_rel = grad_check<double>(parser.params(), loss, eps);
    std::printf("%s: max relative error %.3e over %zu parameters %s\n", name.c_str(), max_rel,
                parser.params().parameter_count(), max_rel < tolerance ? "[ok]" : "[FAIL]");
    char buf[120];
    std::snprintf(buf, sizeof(buf), "%s\t%.6e\n", name.c_str(), max_rel);
    tsv += buf;
    ok = ok && max_rel < tolerance;
  }
  if (!out_str.empty()) {
    const fs::path out = ensure_out_dir(out_str);
    write_text_file(out / "gradcheck.tsv", tsv);
    write_manifest(out, "gradcheck",
                   json{{"arch", arch}, {"eps", eps}, {"tolerance", tolerance}});
  }
  return ok ? kExitOk : kExitViolation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cross-lingual dependency parsing toolkit"};
  app.require_subcommand(1);

  // typology
  auto* typology = app.add_subcommand("typology", "word-order typology statistics");
  typology->require_subcommand(1);
  TypologyArgs targs;
  for (const char* mode : {"vectors", "distance", "cluster", "depdist"}) {
    auto* sub = typology->add_subcommand(mode, std::string("compute ") + mode);
    sub->add_option("--treebanks", targs.treebanks, "directory with <lang>/<split>.conllu")
        ->required();
    sub->add_option("--langs", targs.langs, "comma-separated language codes")->required();
    sub->add_option("--split", targs.split, "treebank split (default train)");
    sub->add_option("--min-avg-freq", targs.min_avg_freq,
                    "minimum average relative frequency (default 0.001)");
    sub->add_option("--min-langs", targs.min_langs,
                    "minimum number of languages a type must appear in (default 20)");
    sub->add_option("--out", targs.out, "output directory")->required();
  }

  // train
  auto* train_cmd = app.add_subcommand("train", "train a parser");
  TrainArgs train_args;
  train_cmd->add_option("--config", train_args.config, "JSON config file (flags override)");
  train_cmd->add_option("--train", train_args.train_path, "training treebank (.conllu)");
  train_cmd->add_option("--dev", train_args.dev_path, "development treebank (.conllu)");
  train_cmd->add_option("--lang", train_args.language, "language code");
  train_cmd->add_option("--embeddings", train_args.embeddings, "frozen word vectors (text)");
  train_cmd->add_option("--seeds", train_args.seeds, "comma-separated seeds (default 1)");
  train_cmd->add_option("--epochs", train_args.epochs, "training epochs");
  train_cmd->add_option("--batch", train_args.batch_size, "batch size (sentences)");
  train_cmd->add_option("--lr", train_args.learning_rate, "learning rate");
  train_cmd->add_option("--max-len", train_args.max_len, "sentence length threshold (140)");
  train_cmd->add_option("--out", train_args.out, "output directory");
  train_cmd->add_option("--arch", train_args.model.arch,
                        "selfatt-graph | rnn-graph | selfatt-stack | rnn-stack");
  train_cmd->add_option("--variant", train_args.model.variant,
                        "self-attention position variant: relative | relative-dir | absolute | noposi");
  train_cmd->add_flag("--delexicalized", train_args.model.delexicalized,
                      "POS-only inputs (zero word vectors)");
  train_cmd->add_option("--layers", train_args.model.layers, "encoder layers");
  train_cmd->add_option("--d-model", train_args.model.d_model, "self-attention width");
  train_cmd->add_option("--heads", train_args.model.heads, "attention heads");
  train_cmd->add_option("--d-ff", train_args.model.d_ff, "feed-forward width");
  train_cmd->add_option("--clip-k", train_args.model.clip_k, "relative offset clip");
  train_cmd->add_option("--rnn-hidden", train_args.model.rnn_hidden, "LSTM size per direction");
  train_cmd->add_option("--word-dim", train_args.model.word_dim, "word vector width");
  train_cmd->add_option("--pos-dim", train_args.model.pos_dim, "POS embedding width");
  train_cmd->add_option("--arc-mlp", train_args.model.arc_mlp, "arc MLP size");
  train_cmd->add_option("--label-mlp", train_args.model.label_mlp, "label MLP size");
  train_cmd->add_option("--dec-hidden", train_args.model.dec_hidden, "pointer LSTM size");
  train_cmd->add_option("--ptr-mlp", train_args.model.ptr_mlp, "pointer MLP size");
  train_cmd->add_option("--dropout", train_args.model.dropout, "dropout probability");

  // parse
  auto* parse_cmd = app.add_subcommand("parse", "parse a treebank with a trained model");
  std::string parse_model, parse_input, parse_embeddings, parse_out, parse_name = "pred.conllu";
  parse_cmd->add_option("--model", parse_model, "checkpoint (.ckpt with .json sidecar)")
      ->required();
  parse_cmd->add_option("--input", parse_input, "input .conllu")->required();
  parse_cmd->add_option("--embeddings", parse_embeddings, "override embeddings path");
  parse_cmd->add_option("--out", parse_out, "output directory")->required();
  parse_cmd->add_option("--name", parse_name, "output file name (default pred.conllu)");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "attachment scores");
  std::string eval_pred, eval_gold, eval_out;
  bool include_punct = false, by_type = false, by_distance = false;
  eval_cmd->add_option("--pred", eval_pred, "predicted .conllu")->required();
  eval_cmd->add_option("--gold", eval_gold, "gold .conllu")->required();
  eval_cmd->add_flag("--include-punct", include_punct, "include PUNCT/SYM tokens");
  eval_cmd->add_flag("--by-type", by_type, "write per-type breakdown");
  eval_cmd->add_flag("--by-distance", by_distance, "write per-distance breakdown");
  eval_cmd->add_option("--out", eval_out, "output directory")->required();

  // analyze
  auto* analyze = app.add_subcommand("analyze", "transfer analyses");
  analyze->require_subcommand(1);
  auto* correlate_cmd = analyze->add_subcommand("correlate", "Pearson/Spearman of two columns");
  std::string corr_pairs, corr_x = "x", corr_y = "y", corr_out;
  correlate_cmd->add_option("--pairs", corr_pairs, "TSV with a header row")->required();
  correlate_cmd->add_option("--x", corr_x, "x column name (default x)");
  correlate_cmd->add_option("--y", corr_y, "y column name (default y)");
  correlate_cmd->add_option("--out", corr_out, "output directory")->required();

  auto* contrast_cmd = analyze->add_subcommand("contrast", "order-free vs order-sensitive gaps");
  std::string contrast_results, contrast_distances, contrast_out;
  contrast_cmd
      ->add_option("--results", contrast_results,
                   "TSV: language, architecture, score (header row)")
      ->required();
  contrast_cmd->add_option("--distances", contrast_distances,
                           "distance matrix TSV for ordering (first row = source)");
  contrast_cmd->add_option("--out", contrast_out, "output directory")->required();

  auto* pairs_cmd = analyze->add_subcommand("pairs", "all-pairs transfer summaries");
  std::string pairs_matrix, pairs_distances, pairs_out;
  pairs_cmd->add_option("--matrix", pairs_matrix, "square source x target score TSV")->required();
  pairs_cmd->add_option("--distances", pairs_distances, "word-ordering distance matrix TSV")
      ->required();
  pairs_cmd->add_option("--out", pairs_out, "output directory")->required();

  // gradcheck
  auto* gradcheck_cmd = app.add_subcommand("gradcheck", "finite-difference gradient check");
  std::string gc_arch = "all", gc_out;
  double gc_eps = 1e-4, gc_tol = 1e-4;
  gradcheck_cmd->add_option("--arch", gc_arch, "architecture or 'all'");
  gradcheck_cmd->add_option("--eps", gc_eps, "central difference step (default 1e-4)");
  gradcheck_cmd->add_option("--tolerance", gc_tol, "max relative error allowed (default 1e-4)");
  gradcheck_cmd->add_option("--out", gc_out, "optional output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints help or the usage diagnostic
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    for (const char* mode : {"vectors", "distance", "cluster", "depdist"})
      if (typology->got_subcommand(mode)) return run_typology(mode, targs);
    if (app.got_subcommand("train")) return run_train(train_args);
    if (app.got_subcommand("parse"))
      return run_parse(parse_model, parse_input, parse_embeddings, parse_out, parse_name);
    if (app.got_subcommand("eval"))
      return run_eval(eval_pred, eval_gold, include_punct, by_type, by_distance, eval_out);
    if (analyze->got_subcommand("correlate"))
      return run_analyze_correlate(corr_pairs, corr_x, corr_y, corr_out);
    if (analyze->got_subcommand("contrast"))
      return run_analyze_contrast(contrast_results, contrast_distances, contrast_out);
    if (analyze->got_subcommand("pairs"))
      return run_analyze_pairs(pairs_matrix, pairs_distances, pairs_out);
    if (app.got_subcommand("gradcheck")) return run_gradcheck(gc_arch, gc_eps, gc_tol, gc_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  std::cerr << "error: no subcommand executed\n";
  return kExitError;
}
