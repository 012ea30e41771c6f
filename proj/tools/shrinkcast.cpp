// Copyright 2026 The shrinkcast Authors
// SPDX-License-Identifier: Apache-2.0
//
// shrinkcast <subcommand> [flags]
//
// Exit status: 0 ok, 1 usage error, 2 runtime error. Failures print one line
// "error: <kind>: <message>" to stderr.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "shrinkcast/checkpoint.hpp"
#include "shrinkcast/cleaner.hpp"
#include "shrinkcast/corpus.hpp"
#include "shrinkcast/error.hpp"
#include "shrinkcast/experiment.hpp"
#include "shrinkcast/lm.hpp"
#include "shrinkcast/model.hpp"
#include "shrinkcast/planner.hpp"
#include "shrinkcast/report.hpp"
#include "shrinkcast/rng.hpp"
#include "shrinkcast/train.hpp"
#include "shrinkcast/truncation.hpp"

namespace sc = shrinkcast;

namespace {

struct TrainFlags {
    sc::TrainConfig cfg;
    std::string optimizer = "adam";
    std::string log_path;

    void attach(CLI::App* app) {
        app->add_option("--lr", cfg.learning_rate, "learning rate")->capture_default_str();
        app->add_option("--steps", cfg.steps, "optimizer steps")->capture_default_str();
        app->add_option("--batch-size", cfg.batch_size)->capture_default_str();
        app->add_option("--seq-len", cfg.seq_len, "window length, 0 = model max")->capture_default_str();
        app->add_option("--optimizer", optimizer)->check(CLI::IsMember({"adam", "sgd"}))->capture_default_str();
        app->add_option("--grad-clip", cfg.grad_clip, "global norm clip, 0 disables")->capture_default_str();
        app->add_option("--steps-per-epoch", cfg.steps_per_epoch)->capture_default_str();
        app->add_option("--loss-log", log_path, "write per-step losses as CSV");
    }

    sc::TrainConfig resolve(std::uint64_t seed) const {
        sc::TrainConfig out = cfg;
        out.optimizer = optimizer == "sgd" ? sc::OptimizerKind::Sgd : sc::OptimizerKind::Adam;
        out.seed = seed;
        if (auto problem = out.check(); !problem.empty()) throw sc::Error(sc::Errc::invalid_argument, problem);
        return out;
    }
};

void attach_distill(CLI::App* app, sc::DistillConfig& d, sc::SmoothingSpec& s) {
    app->add_option("--lambda", d.lambda_kd)->capture_default_str();
    app->add_option("--temperature", d.temperature)->capture_default_str();
    app->add_option("--anneal-max", d.anneal_max)->capture_default_str();
    app->add_option("--mask-ratio", d.mask_ratio)->capture_default_str();
    app->add_option("--rail-weight", d.rail_weight)->capture_default_str();
    app->add_option("--rail-reseed", d.rail_reseed_each_epoch)->capture_default_str();
    app->add_option("--alpha", s.alpha, "label smoothing / TF-reg mixing")->capture_default_str();
    app->add_option("--tf-a", s.a, "TF-reg mass on the correct class")->capture_default_str();
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw sc::Error(sc::Errc::io, "cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out || !(out << text)) throw sc::Error(sc::Errc::io, "cannot write '" + path + "'");
}

sc::TokenStream corpus_arg(const std::string& ref, std::uint64_t seed) {
    return sc::load_corpus(ref, std::filesystem::current_path(), seed);
}

void finish_training(const sc::TrainResult& result, const std::string& out, const std::string& log_path) {
    sc::write_checkpoint(result.checkpoint, out);
    if (!log_path.empty()) sc::write_loss_log(result, log_path);
    if (!result.log.empty()) {
        std::cout << "first_loss " << sc::format_double(result.log.front().loss) << "\n"
                  << "final_loss " << sc::format_double(result.log.back().loss) << "\n";
    }
}

int fail(std::string_view kind, std::string_view message, int code) {
    std::cerr << "error: " << kind << ": " << message << "\n";
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"shrinkcast: layer truncation, distillation and corpus cleaning for small decoder LMs"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "shrinkcast 0.1.0");

    std::uint64_t seed = 0;
    bool seed_given = false;
    auto add_seed = [&](CLI::App* sub) {
        sub->add_option_function<std::uint64_t>(
               "--seed",
               [&](const std::uint64_t& v) {
                   seed = v;
                   seed_given = true;
               },
               "base seed for every random choice")
            ->default_str("0");
    };

    // plan
    auto* plan_cmd = app.add_subcommand("plan", "print a layer selection");
    std::string strategy = "pseudo-uniform";
    int teacher_layers = 0;
    int student_layers = 0;
    std::string plan_out;
    plan_cmd->add_option("--strategy", strategy)->capture_default_str();
    plan_cmd->add_option("-n,--teacher-layers", teacher_layers)->required();
    plan_cmd->add_option("-k,--student-layers", student_layers)->required();
    plan_cmd->add_option("-o,--out", plan_out, "also write the plan line here");
    add_seed(plan_cmd);

    // truncate
    auto* trunc_cmd = app.add_subcommand("truncate", "copy selected teacher layers into a student checkpoint");
    std::string teacher_path, student_out, plan_file;
    trunc_cmd->add_option("--teacher", teacher_path)->required()->check(CLI::ExistingFile);
    trunc_cmd->add_option("--plan", plan_file, "plan file written by `plan`")->check(CLI::ExistingFile);
    trunc_cmd->add_option("--strategy", strategy)->capture_default_str();
    trunc_cmd->add_option("-k,--student-layers", student_layers);
    trunc_cmd->add_option("-o,--out", student_out)->required();
    add_seed(trunc_cmd);

    // clean
    auto* clean_cmd = app.add_subcommand("clean", "filter a line-delimited UTF-8 corpus");
    std::string clean_in, clean_out, stats_out;
    sc::CleanOptions clean_opts;
    clean_cmd->add_option("-i,--input", clean_in)->required()->check(CLI::ExistingFile);
    clean_cmd->add_option("-o,--output", clean_out)->required();
    clean_cmd->add_option("--stats", stats_out, "stats CSV path");
    clean_cmd->add_option("--short-threshold", clean_opts.short_threshold)->capture_default_str();
    clean_cmd->add_option("--ratio-threshold", clean_opts.ratio_threshold)->capture_default_str();
    clean_cmd->add_option("--html-strip-threshold", clean_opts.html_strip_threshold)->capture_default_str();
    clean_cmd->add_option("-j,--jobs", clean_opts.jobs)->capture_default_str();

    // init
    auto* init_cmd = app.add_subcommand("init", "write a randomly initialised checkpoint");
    sc::ModelConfig init_cfg;
    std::string init_out;
    init_cmd->add_option("--layers", init_cfg.n_layers)->capture_default_str();
    init_cmd->add_option("--heads", init_cfg.n_heads)->capture_default_str();
    init_cmd->add_option("--d-model", init_cfg.d_model)->capture_default_str();
    init_cmd->add_option("--vocab", init_cfg.vocab_size)->capture_default_str();
    init_cmd->add_option("--max-seq-len", init_cfg.max_seq_len)->capture_default_str();
    init_cmd->add_option("-o,--out", init_out)->required();
    add_seed(init_cmd);

    // gen-corpus
    auto* gen_cmd = app.add_subcommand("gen-corpus", "write a synthetic-grammar token corpus");
    std::size_t gen_tokens = 200000;
    int gen_domain = 0;
    std::string gen_out;
    gen_cmd->add_option("--tokens", gen_tokens)->capture_default_str();
    gen_cmd->add_option("--domain", gen_domain)->capture_default_str();
    gen_cmd->add_option("-o,--out", gen_out)->required();
    add_seed(gen_cmd);

    // pretrain / finetune
    std::string init_path, corpus_ref, train_out;
    TrainFlags pretrain_flags;
    auto* pretrain_cmd = app.add_subcommand("pretrain", "train with next-token cross-entropy");
    pretrain_cmd->add_option("--init", init_path)->required()->check(CLI::ExistingFile);
    pretrain_cmd->add_option("--corpus", corpus_ref, "token file or synthetic:<tokens>[:<domain>[:<seed>]]")
        ->required();
    pretrain_cmd->add_option("-o,--out", train_out)->required();
    pretrain_flags.attach(pretrain_cmd);
    add_seed(pretrain_cmd);

    TrainFlags finetune_flags;
    finetune_flags.cfg.learning_rate = 3e-4;
    auto* finetune_cmd = app.add_subcommand("finetune", "continue cross-entropy training on a target corpus");
    finetune_cmd->add_option("--init", init_path)->required()->check(CLI::ExistingFile);
    finetune_cmd->add_option("--corpus", corpus_ref)->required();
    finetune_cmd->add_option("-o,--out", train_out)->required();
    finetune_flags.attach(finetune_cmd);
    add_seed(finetune_cmd);

    // distill
    auto* distill_cmd = app.add_subcommand("distill", "train a student with a distillation or teacher-free loss");
    TrainFlags distill_flags;
    sc::MethodSettings method;
    std::string method_str = "vanilla-kd";
    std::string distill_teacher;
    TrainFlags selfkd_flags;
    distill_cmd->add_option("--student", init_path)->required()->check(CLI::ExistingFile);
    distill_cmd->add_option("--teacher", distill_teacher, "required for teacher-based methods")
        ->check(CLI::ExistingFile);
    distill_cmd->add_option("--method", method_str)->capture_default_str();
    distill_cmd->add_option("--corpus", corpus_ref)->required();
    distill_cmd->add_option("-o,--out", train_out)->required();
    distill_cmd->add_option("--selfkd-steps", selfkd_flags.cfg.steps, "self-KD teacher training steps")
        ->capture_default_str();
    distill_flags.attach(distill_cmd);
    attach_distill(distill_cmd, method.distill, method.smoothing);
    add_seed(distill_cmd);

    // eval-ppl
    auto* eval_cmd = app.add_subcommand("eval-ppl", "perplexity of a checkpoint on a corpus");
    std::string eval_ckpt;
    eval_cmd->add_option("--checkpoint", eval_ckpt)->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--corpus", corpus_ref)->required();
    add_seed(eval_cmd);

    // run
    auto* run_cmd = app.add_subcommand("run", "run an experiment spec end to end");
    std::string spec_path, run_out;
    run_cmd->add_option("spec", spec_path)->required()->check(CLI::ExistingFile);
    run_cmd->add_option("-o,--out", run_out, "output directory");
    add_seed(run_cmd);

    // report
    auto* report_cmd = app.add_subcommand("report", "merge result CSVs into report.csv and report.txt");
    std::vector<std::string> report_inputs;
    std::string report_dir;
    report_cmd->add_option("results", report_inputs, "result.csv files")->required()->check(CLI::ExistingFile);
    report_cmd->add_option("-o,--out", report_dir)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail("usage", e.what(), 1);
    }

    try {
        if (*plan_cmd) {
            const auto plan = sc::make_plan(sc::parse_strategy(strategy), teacher_layers, student_layers, seed);
            const std::string line = sc::format_plan(plan);
            std::cout << line << "\n";
            if (!plan_out.empty()) write_file(plan_out, line + "\n");
        } else if (*trunc_cmd) {
            const sc::Checkpoint teacher = sc::read_checkpoint(teacher_path);
            sc::LayerPlan plan;
            if (!plan_file.empty()) {
                std::string text = read_file(plan_file);
                while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
                plan = sc::parse_plan(text);
            } else {
                if (student_layers <= 0) {
                    return fail("usage", "truncate needs --plan or --student-layers", 1);
                }
                plan = sc::make_plan(sc::parse_strategy(strategy), static_cast<int>(teacher.config.n_layers),
                                     student_layers, seed);
            }
            sc::write_checkpoint(sc::truncate(teacher, plan), student_out);
            std::cout << sc::format_plan(plan) << "\n";
        } else if (*clean_cmd) {
            std::ifstream in(clean_in, std::ios::binary);
            std::ofstream out(clean_out, std::ios::binary | std::ios::trunc);
            if (!in) throw sc::Error(sc::Errc::io, "cannot open '" + clean_in + "'");
            if (!out) throw sc::Error(sc::Errc::io, "cannot write '" + clean_out + "'");
            const auto stats = sc::clean_stream(in, out, clean_opts);
            const std::string csv = sc::format_stats_csv(stats);
            if (!stats_out.empty()) write_file(stats_out, csv);
            std::cout << csv;
        } else if (*init_cmd) {
            if (auto problem = init_cfg.check(); !problem.empty()) {
                throw sc::Error(sc::Errc::invalid_argument, problem);
            }
            sc::write_checkpoint(sc::init_checkpoint(init_cfg, seed), init_out);
        } else if (*gen_cmd) {
            sc::write_tokens(sc::generate_grammar_corpus(gen_tokens, seed, gen_domain), gen_out);
        } else if (*pretrain_cmd || *finetune_cmd) {
            const TrainFlags& flags = *pretrain_cmd ? pretrain_flags : finetune_flags;
            const auto init = sc::read_checkpoint(init_path);
            const auto corpus = corpus_arg(corpus_ref, seed);
            sc::CrossEntropyObjective objective;
            finish_training(sc::train(init, corpus, flags.resolve(seed), objective), train_out, flags.log_path);
        } else if (*distill_cmd) {
            method.method = sc::parse_method(method_str);
            selfkd_flags.cfg.learning_rate = distill_flags.cfg.learning_rate;
            method.self_teacher = selfkd_flags.resolve(seed);
            if (auto problem = method.distill.check(); !problem.empty()) {
                throw sc::Error(sc::Errc::invalid_argument, problem);
            }
            const auto student = sc::read_checkpoint(init_path);
            const auto corpus = corpus_arg(corpus_ref, seed);
            std::shared_ptr<const sc::Checkpoint> teacher;
            if (!distill_teacher.empty()) teacher = std::make_shared<sc::Checkpoint>(sc::read_checkpoint(distill_teacher));
            const auto cfg = distill_flags.resolve(seed);
            auto objective = sc::make_objective(method, student, teacher, corpus, cfg, seed);
            finish_training(sc::train(student, corpus, cfg, *objective), train_out, distill_flags.log_path);
        } else if (*eval_cmd) {
            const auto ckpt = sc::read_checkpoint(eval_ckpt);
            std::cout << sc::format_double(sc::perplexity(ckpt, corpus_arg(corpus_ref, seed))) << "\n";
        } else if (*run_cmd) {
            auto spec = sc::load_experiment(spec_path);
            if (seed_given) spec.seed = seed;
            std::optional<std::filesystem::path> out;
            if (!run_out.empty()) out = run_out;
            const auto result = sc::run_experiment(spec, out);
            std::cout << sc::format_result_csv({result.row});
        } else if (*report_cmd) {
            std::vector<sc::ResultRow> rows;
            for (const auto& path : report_inputs) {
                auto parsed = sc::parse_result_csv(read_file(path));
                rows.insert(rows.end(), parsed.begin(), parsed.end());
            }
            sc::emit_report(rows, report_dir);
            std::cout << sc::render_report(rows).table;
        }
    } catch (const sc::Error& e) {
        return fail(sc::errc_name(e.code()), e.what(), 2);
    } catch (const std::exception& e) {
        return fail("internal", e.what(), 2);
    }
    return 0;
}
