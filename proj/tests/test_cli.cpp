// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "swcm/checkpoint.hpp"
#include "swcm/error.hpp"
#include "swcm/grafting.hpp"
#include "swcm/run_config.hpp"
#include "swcm/train.hpp"

#ifndef SWCM_CLI_PATH
#error "SWCM_CLI_PATH must point at the swcm executable"
#endif

using namespace swcm;
namespace fs = std::filesystem;

namespace {

ModelConfig small_config() {
  ModelConfig c;
  c.n_encoder_layers = 3;
  c.d_model = 8;
  c.n_heads = 2;
  c.d_ff = 16;
  c.vocab_size = 20;
  c.max_seq_len = 12;
  c.insert_every_x = 2;
  return c;
}

fs::path fresh_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("swcm_test_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

bool bitwise_equal(const SharedWeightModel& a, const SharedWeightModel& b) {
  const auto pa = unique_parameters(a), pb = unique_parameters(b);
  if (pa.size() != pb.size()) return false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (pa[i].name != pb[i].name || pa[i].tensor.shape() != pb[i].tensor.shape()) return false;
    for (std::size_t k = 0; k < pa[i].tensor.numel(); ++k) {
      if (std::bit_cast<std::uint64_t>(pa[i].tensor.at(k)) !=
          std::bit_cast<std::uint64_t>(pb[i].tensor.at(k))) {
        return false;
      }
    }
  }
  return true;
}

struct Run {
  int code = -1;
  std::string output;
};

Run cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + "\"" SWCM_CLI_PATH "\" " + args + " 2>&1";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe)) r.output += buf;
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

}  // namespace

// ---------------------------------------------------------------------------
// Checkpoints

TEST_CASE("seq2seq checkpoint round trip is bitwise") {
  SharedWeightModel m = assemble_model(small_config(), AssembleOptions{4});
  Checkpoint c = make_checkpoint(m);
  c.vocab = {"<pad>", "<s>", "</s>", "<mask>", "<unk>", "<zh>", "end-of-manifest", "a"};
  c.metadata["step"] = "12";
  OptimizerState opt;
  opt.step = 3;
  opt.weight_decay = 0.0125;
  opt.moments.push_back({"decoder.0.ffn1.expand.weight", {0.1, -1e-300}, {1.0 / 3.0, 4.0}});
  c.optimizer = opt;
  const fs::path dir = fresh_dir("ckpt");
  save_checkpoint((dir / "m.ckpt").string(), c);
  const Checkpoint back = load_checkpoint((dir / "m.ckpt").string());
  CHECK(back.kind == CheckpointKind::Seq2Seq);
  CHECK(back.config == m.config);
  CHECK(back.model.layout == m.layout);
  CHECK(bitwise_equal(back.model, m));
  CHECK(back.vocab == c.vocab);
  CHECK(back.metadata.at("step") == "12");
  REQUIRE(back.optimizer.has_value());
  CHECK(back.optimizer->step == 3);
  CHECK(back.optimizer->weight_decay == 0.0125);
  REQUIRE(back.optimizer->moments.size() == 1);
  CHECK(back.optimizer->moments[0].m == opt.moments[0].m);
  CHECK(back.optimizer->moments[0].v == opt.moments[0].v);
  CHECK(serialize_checkpoint(back) == read_file(dir / "m.ckpt"));

  // The output projection is stored once and listed as a tie.
  const CheckpointManifest man = read_manifest((dir / "m.ckpt").string());
  bool tied = false;
  for (const auto& [alias, target] : man.ties) tied |= alias == "output_projection";
  CHECK(tied);
  std::size_t offset = 0;
  for (const auto& t : man.tensors) {
    CHECK(t.name != "output_projection");
    CHECK(t.offset == offset);
    CHECK(t.length == shape_numel(t.shape) * 8);
    offset += t.length;
  }
  Checkpoint mutable_back = back;
  mutable_back.model.output_projection.mutable_data()[2] = 9.5;
  CHECK(mutable_back.model.encoder.token_embedding.at(2) == 9.5);
}

TEST_CASE("tied grafted weights keep their aliasing through a checkpoint") {
  AssembleOptions opt{1};
  opt.tie_grafted_weights = true;
  SharedWeightModel m = assemble_model(small_config(), opt);
  const std::string bytes = serialize_checkpoint(make_checkpoint(m));
  Checkpoint back = deserialize_checkpoint(bytes);
  CHECK(bitwise_equal(back.model, m));
  CHECK(unique_parameters(back.model).size() == unique_parameters(m).size());
  auto& enc = back.model.encoder.layers[0];
  auto& dec = std::get<CustomDecoderLayerParams>(back.model.decoder[0]);
  enc.ffn.expand.weight.mutable_data()[0] = -7.0;
  CHECK(dec.ffn1.expand.weight.at(0) == -7.0);
  CHECK(dec.ffn2.expand.weight.at(0) == -7.0);
  CHECK(serialize_checkpoint(make_checkpoint(m)) == bytes);
}

TEST_CASE("encoder checkpoints") {
  const ModelConfig c = small_config();
  const EncoderStack e = random_encoder_stack(c, 2);
  const Checkpoint back = deserialize_checkpoint(serialize_checkpoint(make_checkpoint(e, c)));
  CHECK(back.kind == CheckpointKind::Encoder);
  const auto a = unique_parameters(e), b = unique_parameters(back.encoder);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(std::equal(a[i].tensor.data().begin(), a[i].tensor.data().end(), b[i].tensor.data().begin()));
  }
}

TEST_CASE("malformed checkpoints are format errors") {
  SharedWeightModel m = assemble_model(small_config(), AssembleOptions{4});
  const std::string good = serialize_checkpoint(make_checkpoint(m));
  const std::size_t split = good.find("end-of-manifest\n") + 16;
  const std::string manifest = good.substr(0, split);

  CHECK_THROWS_AS(deserialize_checkpoint(""), FormatError);
  CHECK_THROWS_AS(deserialize_checkpoint("not a checkpoint\n"), FormatError);
  CHECK_THROWS_AS(deserialize_checkpoint(good.substr(0, good.size() - 8)), FormatError);
  CHECK_THROWS_AS(deserialize_checkpoint(good + "extra"), FormatError);
  CHECK_THROWS_AS(deserialize_checkpoint(manifest.substr(0, manifest.size() - 16)), FormatError);

  auto edited = [&](const std::string& from, const std::string& to) {
    std::string s = manifest;
    const auto at = s.find(from);
    REQUIRE(at != std::string::npos);
    s.replace(at, from.size(), to);
    return s + good.substr(split);
  };
  CHECK_THROWS_AS(deserialize_checkpoint(edited("swcm-checkpoint 1", "swcm-checkpoint 9")), FormatError);
  CHECK_THROWS_AS(deserialize_checkpoint(edited("tensor embedding.token 20,8",
                                                "tensor embedding.token 8,20")),
                  FormatError);
  CHECK_THROWS_AS(deserialize_checkpoint(edited("tie output_projection", "tie nothing_here")),
                  FormatError);
  CHECK_THROWS_AS(deserialize_checkpoint(edited("layout C0 C1 N C2", "layout C0 N C1 C2")),
                  FormatError);
  const fs::path dir = fresh_dir("bad_ckpt");
  CHECK_THROWS_AS(load_checkpoint((dir / "absent.ckpt").string()), FormatError);
}

// ---------------------------------------------------------------------------
// Run configuration

TEST_CASE("run configuration parsing") {
  const RunConfig c = RunConfig::parse(
      "# comment\n"
      "d_model = 16\n"
      "n_heads=2\n"
      "  peak_lr = 3e-4   # trailing\n"
      "use_mt = false\n"
      "normal_layer_mode = duplicate\n"
      "frozen_prefixes = encoder.,decoder.0.\n"
      "vocab_path = data/vocab.txt\n"
      "output_dir = /abs/out\n"
      "seed = 42\n",
      "/base");
  CHECK(c.model.d_model == 16);
  CHECK(c.model.n_heads == 2);
  CHECK(c.train.peak_lr == 3e-4);
  CHECK_FALSE(c.train.use_mt);
  CHECK(c.normal_layer_mode == NormalLayerMode::Duplicate);
  CHECK(c.train.frozen_prefixes == std::vector<std::string>{"encoder.", "decoder.0."});
  CHECK(fs::path(c.vocab_path) == fs::path("/base/data/vocab.txt"));
  CHECK(c.output_dir == "/abs/out");
  CHECK(c.seed == 42);
  CHECK(c.train.seed == 42);
  CHECK(c.noise.seed == 42);

  const RunConfig again = RunConfig::parse(c.to_text());
  CHECK(again.entries() == c.entries());
  CHECK(RunConfig::parse(RunConfig().to_text()).entries() == RunConfig().entries());
  CHECK(RunConfig().entries().size() == RunConfig::keys().size());

  CHECK_THROWS_AS(RunConfig::parse("learning_rate = 1\n"), ConfigError);
  CHECK_THROWS_AS(RunConfig::parse("d_model = wide\n"), ConfigError);
  CHECK_THROWS_AS(RunConfig::parse("use_dae = maybe\n"), ConfigError);
  CHECK_THROWS_AS(RunConfig::parse("warmup_proportion = 1.5\n"), ConfigError);
  CHECK_THROWS_AS(RunConfig::parse("d_model 16\n"), FormatError);
}

TEST_CASE("seed override from the environment") {
  const fs::path dir = fresh_dir("seed");
  write_file(dir / "run.cfg", "seed = 3\n");
  ::unsetenv("SWCM_SEED");
  CHECK(RunConfig::load((dir / "run.cfg").string()).seed == 3);
  ::setenv("SWCM_SEED", "17", 1);
  const RunConfig c = RunConfig::load((dir / "run.cfg").string());
  CHECK(c.seed == 17);
  CHECK(c.train.seed == 17);
  ::setenv("SWCM_SEED", "x", 1);
  CHECK_THROWS_AS(RunConfig::load((dir / "run.cfg").string()), ConfigError);
  ::unsetenv("SWCM_SEED");
}

// ---------------------------------------------------------------------------
// Command line

TEST_CASE("command line workflow") {
  const fs::path dir = fresh_dir("workflow");
  const fs::path corpus = dir / "corpus";
  Run r = cli("gen-corpus --languages zh,bo --sizes 60,30 --parallel 20 --valid 5 --alphabet-size 10 "
               "--lexicon-size 30 --max-words 3 --seed 5 --out-dir " + q(corpus));
  REQUIRE(r.code == 0);
  for (const char* f : {"mono.tsv", "parallel.tsv", "vocab.txt", "valid.tsv"}) CHECK(fs::exists(corpus / f));

  const std::string model_keys =
      "d_model = 8\nn_heads = 2\nd_ff = 16\nmax_seq_len = 24\n"
      "vocab_path = corpus/vocab.txt\nmonolingual_path = corpus/mono.tsv\n";

  SUBCASE("grafting") {
    write_file(dir / "enc12.cfg", model_keys + "n_encoder_layers = 12\nseed = 1\n");
    REQUIRE(cli("init-encoder --config " + q(dir / "enc12.cfg") + " --out " + q(dir / "enc12.ckpt")).code == 0);
    r = cli("graft --encoder-ckpt " + q(dir / "enc12.ckpt") + " --x 3 --seed 2 --out " + q(dir / "g1.ckpt"));
    CHECK(r.code == 0);
    CHECK(r.output.find("16 decoder layers") != std::string::npos);
    CHECK(r.output.find("C0 C1 C2 N C3 C4 C5 N C6 C7 C8 N C9 C10 C11 N") != std::string::npos);
    CHECK(cli("graft --encoder-ckpt " + q(dir / "enc12.ckpt") + " --x 3 --seed 2 --out " + q(dir / "g2.ckpt")).code == 0);
    CHECK(read_file(dir / "g1.ckpt") == read_file(dir / "g2.ckpt"));

    CHECK(cli("graft --encoder-ckpt " + q(dir / "enc12.ckpt") + " --x 0 --out " + q(dir / "g3.ckpt")).code == 3);
    write_file(dir / "junk.ckpt", "swcm-checkpoint 1\nkind seq2seq\ngarbage\n");
    CHECK(cli("graft --encoder-ckpt " + q(dir / "junk.ckpt") + " --x 3 --out " + q(dir / "g4.ckpt")).code == 2);
    CHECK(cli("graft --encoder-ckpt " + q(dir / "missing.ckpt") + " --x 3 --out " + q(dir / "g5.ckpt")).code == 2);

    r = cli("inspect-ckpt " + q(dir / "g1.ckpt"));
    CHECK(r.code == 0);
    CHECK(r.output.find("seq2seq") != std::string::npos);
  }

  SUBCASE("pretraining, resume and ablation switches") {
    const std::string run_keys = model_keys +
                                 "n_encoder_layers = 2\ninsert_every_x = 1\nparallel_path = corpus/parallel.tsv\n"
                                 "valid_path = corpus/valid.tsv\nmax_steps = 16\nglobal_batch = 4\n"
                                 "peak_lr = 1e-3\nepochs = 2\nseed = 9\n";
    write_file(dir / "a.cfg", run_keys + "output_dir = a\n");
    write_file(dir / "b.cfg", run_keys + "output_dir = b\n");
    r = cli("pretrain " + q(dir / "a.cfg"));
    REQUIRE(r.code == 0);
    CHECK(r.output.find("held-out loss") != std::string::npos);
    CHECK(lines_of(read_file(dir / "a/loss.log")).size() == 16);
    CHECK(fs::exists(dir / "a/resolved.cfg"));
    CHECK(fs::exists(dir / "a/valid_loss.txt"));
    const RunConfig resolved = RunConfig::load((dir / "a/resolved.cfg").string());
    CHECK(resolved.train.max_steps == 16);
    CHECK(resolved.seed == 9);

    REQUIRE(cli("pretrain " + q(dir / "b.cfg") + " --stop-after 7").code == 0);
    CHECK(lines_of(read_file(dir / "b/loss.log")).size() == 7);
    REQUIRE(cli("pretrain " + q(dir / "b.cfg") + " --resume").code == 0);
    CHECK(read_file(dir / "a/loss.log") == read_file(dir / "b/loss.log"));
    CHECK(read_file(dir / "a/model.ckpt") == read_file(dir / "b/model.ckpt"));

    // The same resolved config reproduces the run from scratch.
    write_file(dir / "c.cfg", read_file(dir / "a/resolved.cfg"));
    RunConfig from_snapshot = RunConfig::load((dir / "c.cfg").string());
    from_snapshot.output_dir = (dir / "c").string();
    write_file(dir / "c.cfg", from_snapshot.to_text());
    REQUIRE(cli("pretrain " + q(dir / "c.cfg")).code == 0);
    CHECK(read_file(dir / "a/loss.log") == read_file(dir / "c/loss.log"));

    write_file(dir / "nomt.cfg", run_keys + "use_mt = false\noutput_dir = nomt\n");
    REQUIRE(cli("pretrain " + q(dir / "nomt.cfg")).code == 0);
    for (const auto& line : lines_of(read_file(dir / "nomt/loss.log"))) CHECK(parse_log_line(line).task == "dae");
    write_file(dir / "nodae.cfg", run_keys + "use_dae = false\noutput_dir = nodae\n");
    REQUIRE(cli("pretrain " + q(dir / "nodae.cfg")).code == 0);
    for (const auto& line : lines_of(read_file(dir / "nodae/loss.log"))) CHECK(parse_log_line(line).task == "mt");

    r = cli("pretrain " + q(dir / "a.cfg"), "SWCM_SEED=21");
    REQUIRE(r.code == 0);
    CHECK(RunConfig::load((dir / "a/resolved.cfg").string()).seed == 21);

    write_file(dir / "blowup.cfg", run_keys + "peak_lr = 1e300\nwarmup_floor_lr = 1e300\noutput_dir = blowup\n");
    CHECK(cli("pretrain " + q(dir / "blowup.cfg")).code == 4);
    write_file(dir / "unknown.cfg", run_keys + "dropout = 0.1\n");
    CHECK(cli("pretrain " + q(dir / "unknown.cfg")).code == 3);
    write_file(dir / "badcorpus.tsv", "zh no tab\n");
    write_file(dir / "badcorpus.cfg", run_keys + "monolingual_path = badcorpus.tsv\noutput_dir = bad\n");
    CHECK(cli("pretrain " + q(dir / "badcorpus.cfg")).code == 2);
  }

  SUBCASE("finetune, evaluate, generate") {
    // A copy task on the pivot side of the parallel corpus.
    std::string train, valid;
    std::size_t k = 0;
    for (const auto& line : lines_of(read_file(corpus / "parallel.tsv"))) {
      const std::string zh = line.substr(line.rfind('\t') + 1);
      (k++ < 15 ? train : valid) += "zh\tzh\t" + zh + "\t" + zh + "\n";
    }
    write_file(dir / "task_train.tsv", train);
    write_file(dir / "task_valid.tsv", valid);
    write_file(dir / "ft.cfg", model_keys +
                                   "n_encoder_layers = 2\ninsert_every_x = 1\nparallel_path = task_train.tsv\n"
                                   "valid_path = task_valid.tsv\nmax_steps = 10\nglobal_batch = 4\n"
                                   "eval_max_new = 12\noutput_dir = ft\nseed = 4\n");
    r = cli("finetune " + q(dir / "ft.cfg"));
    REQUIRE(r.code == 0);
    CHECK(r.output.find("rouge-l f=") != std::string::npos);
    CHECK(lines_of(read_file(dir / "ft/results.tsv")).size() == 6);

    r = cli("evaluate --ckpt " + q(dir / "ft/model.ckpt") + " --data " + q(dir / "task_valid.tsv") +
             " --max-new 12 --out " + q(dir / "report.tsv"));
    REQUIRE(r.code == 0);
    const auto report = lines_of(read_file(dir / "report.tsv"));
    REQUIRE(report.size() == 6);
    double sum = 0.0;
    for (std::size_t i = 0; i < 5; ++i) {
      std::istringstream fields(report[i]);
      std::string id;
      double f = 0.0;
      fields >> id >> f;
      sum += f;
    }
    std::istringstream summary(report.back());
    std::string label;
    double mean = -1.0;
    summary >> label >> mean;
    CHECK(label == "mean");
    CHECK(std::abs(sum / 5 - mean) <= 1e-12);

    write_file(dir / "empty.tsv", "");
    CHECK(cli("evaluate --ckpt " + q(dir / "ft/model.ckpt") + " --data " + q(dir / "empty.tsv") +
               " --lang zh").code == 5);
    write_file(dir / "broken.tsv", "zh\tzh\tonly three\n");
    CHECK(cli("evaluate --ckpt " + q(dir / "ft/model.ckpt") + " --data " + q(dir / "broken.tsv")).code == 2);
    CHECK(cli("evaluate --ckpt " + q(dir / "ft/model.ckpt") + " --data " + q(dir / "task_valid.tsv") +
               " --lang xx").code == 3);

    write_file(dir / "inputs.tsv", "zh\t" + valid.substr(6, valid.find('\t', 6) - 6) + "\nzh\t\n");
    r = cli("generate --ckpt " + q(dir / "ft/model.ckpt") + " --input " + q(dir / "inputs.tsv") +
             " --lang bo --max-new 6 --out " + q(dir / "gen.tsv"));
    REQUIRE(r.code == 0);
    const auto gen = lines_of(read_file(dir / "gen.tsv"));
    REQUIRE(gen.size() == 2);
    for (const auto& line : gen) CHECK(line.rfind("<bo>\t", 0) == 0);
  }

  SUBCASE("sweep over insertion frequency") {
    std::string pairs;
    for (const auto& line : lines_of(read_file(corpus / "parallel.tsv"))) pairs += line + "\n";
    write_file(dir / "sweep.cfg", model_keys +
                                      "n_encoder_layers = 2\nparallel_path = corpus/parallel.tsv\n"
                                      "valid_path = corpus/parallel.tsv\nmax_steps = 3\nglobal_batch = 2\n"
                                      "eval_max_new = 4\nseed = 6\n");
    const std::string args = "sweep-x " + q(dir / "sweep.cfg") + " --x-list 1,2 --sizes 4,8,12 --out-dir ";
    REQUIRE(cli(args + q(dir / "s1")).code == 0);
    const auto grid = lines_of(read_file(dir / "s1/grid.tsv"));
    REQUIRE(grid.size() == 1 + 2 * 3);
    CHECK(grid[0] == "x\tsize\tf\tp\tr");
    for (int x : {1, 2}) {
      for (int n : {4, 8, 12}) {
        const fs::path cell = dir / "s1" / ("x" + std::to_string(x) + "_n" + std::to_string(n));
        CHECK(fs::exists(cell / "resolved.cfg"));
        CHECK(RunConfig::load((cell / "resolved.cfg").string()).model.insert_every_x == x);
      }
    }
    REQUIRE(cli(args + q(dir / "s2")).code == 0);
    CHECK(read_file(dir / "s1/grid.tsv") == read_file(dir / "s2/grid.tsv"));
  }

  SUBCASE("usage errors") {
    CHECK(cli("").code != 0);
    CHECK(cli("frobnicate").code == 3);
    CHECK(cli("pretrain " + q(dir / "no_such.cfg")).code == 3);
  }
}
