#include "qaval/cli.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "qaval/engine.hpp"
#include "qaval/ingestion.hpp"
#include "qaval/metrics.hpp"
#include "qaval/qa_samples.hpp"
#include "qaval/scorer.hpp"
#include "qaval/synthetic_data.hpp"

#ifndef QAVAL_VERSION
#define QAVAL_VERSION "0.0.0"
#endif

namespace qaval::cli {

namespace {

using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

// Usage problems detected after CLI11 parsing succeeded.
class UsageError : public Error {
public:
    using Error::Error;
};

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "' for reading");
    return in;
}

std::string read_file(const std::string& path) {
    auto in = open_input(path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Writes `path` from a callback, failing loudly on I/O errors.
template <typename Fn>
void write_file(const std::string& path, Fn&& fn) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    fn(out);
    out.flush();
    if (!out) throw Error("failed writing '" + path + "'");
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw Error("SHA-256 computation failed");
    }
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return hex.str();
}

// Emitted next to every output file as <output>.manifest.json.
class Manifest {
public:
    explicit Manifest(std::string command) {
        doc_["tool"] = "qaval";
        doc_["version"] = QAVAL_VERSION;
        doc_["command"] = std::move(command);
        doc_["config"] = ordered_json::object();
        doc_["inputs"] = ordered_json::object();
        doc_["deterministic"] = true;
    }

    ordered_json& config() { return doc_["config"]; }

    void input(const std::string& role, const std::string& path) {
        doc_["inputs"][role] = {{"path", path}, {"sha256", sha256_hex(read_file(path))}};
    }

    void set_deterministic(bool value) { doc_["deterministic"] = value; }

    void write_for(const std::string& output_path) const {
        write_file(output_path + ".manifest.json", [&](std::ostream& out) { out << doc_.dump(2) << '\n'; });
    }

private:
    ordered_json doc_;
};

RelationSchema load_schema(const std::string& path) {
    auto in = open_input(path);
    return parse_schema(in);
}

std::vector<Bag> load_bags(const std::string& path, const RelationSchema& schema) {
    auto in = open_input(path);
    try {
        return parse_bags(in, schema);
    } catch (const ParseError& e) {
        throw Error(path + ": " + e.what());
    }
}

RcPredictionMap load_rc(const std::string& path, const RelationSchema& schema) {
    auto in = open_input(path);
    try {
        return parse_rc_predictions(in, schema);
    } catch (const ParseError& e) {
        throw Error(path + ": " + e.what());
    }
}

// --- scorer spec ----------------------------------------------------------

struct ParsedScorer {
    ScorerSpec spec;
    ordered_json description;
    std::optional<std::string> facts_path;
};

// synthetic[:noise=X,seed=N,facts=PATH] or remote:<endpoint>
ParsedScorer parse_scorer(const std::string& text, const std::vector<Bag>& bags, const RelationSchema& schema,
                          std::chrono::milliseconds timeout) {
    ParsedScorer parsed;
    if (text.starts_with("remote:")) {
        protocol::Endpoint endpoint;
        try {
            endpoint = protocol::Endpoint::parse(text.substr(7));
        } catch (const protocol::ProtocolError& e) {
            throw UsageError(e.what());
        }
        parsed.description = {{"kind", "remote"}, {"endpoint", endpoint.to_string()}, {"timeout_ms", timeout.count()}};
        parsed.spec = RemoteScorerSpec{endpoint, RemoteOptions{timeout}};
        return parsed;
    }
    if (text != "synthetic" && !text.starts_with("synthetic:")) {
        throw UsageError("--scorer must be synthetic[:noise=X,seed=N,facts=PATH] or remote:<endpoint>");
    }
    SyntheticScorerSpec spec;
    std::string params = text.size() > 10 ? text.substr(10) : "";
    std::istringstream in(params);
    for (std::string item; std::getline(in, item, ',');) {
        auto eq = item.find('=');
        if (eq == std::string::npos) throw UsageError("scorer parameter '" + item + "' is not key=value");
        const auto key = item.substr(0, eq);
        const auto value = item.substr(eq + 1);
        try {
            std::size_t used = 0;
            if (key == "noise") {
                spec.noise = std::stod(value, &used);
            } else if (key == "seed") {
                spec.seed = std::stoull(value, &used);
            } else if (key == "facts") {
                parsed.facts_path = value;
                used = value.size();
            } else {
                throw UsageError("unknown synthetic scorer parameter '" + key + "'");
            }
            if (used != value.size()) throw UsageError("bad value for scorer parameter '" + key + "'");
        } catch (const std::logic_error&) {
            throw UsageError("bad value for scorer parameter '" + key + "'");
        }
    }
    if (!(spec.noise >= 0.0 && spec.noise < 1.0)) throw UsageError("synthetic scorer noise must lie in [0, 1)");
    spec.facts = parsed.facts_path ? facts_from_bags(load_bags(*parsed.facts_path, schema), schema)
                                   : facts_from_bags(bags, schema);
    parsed.description = {{"kind", "synthetic"}, {"noise", spec.noise}, {"seed", spec.seed}, {"facts", spec.facts.size()}};
    parsed.spec = std::move(spec);
    return parsed;
}

// --- commands -------------------------------------------------------------

struct SynthArgs {
    std::string out_dir;
    SyntheticDataOptions options;
};

int cmd_synth(const SynthArgs& args, std::ostream& out) {
    auto data = generate_synthetic_data(args.options);
    fs::create_directories(args.out_dir);
    const auto dir = fs::path(args.out_dir);
    write_file((dir / "schema.json").string(), [&](std::ostream& o) { write_schema(o, data.schema); });
    write_file((dir / "bags.jsonl").string(), [&](std::ostream& o) {
        for (const auto& bag : data.bags) write_bag(o, bag, data.schema);
    });
    write_file((dir / "rc.jsonl").string(), [&](std::ostream& o) {
        for (const auto& p : data.predictions) write_rc_prediction(o, p);
    });
    out << "wrote " << data.bags.size() << " bags (" << data.flipped << " with a wrong RC argmax) to "
        << args.out_dir << '\n';
    return kSuccess;
}

struct CheckArgs {
    std::string schema;
    std::string bags;
    std::string rc;
    std::string pred;
    std::string qa;
};

int cmd_check(const CheckArgs& args, std::ostream& out) {
    const auto schema = load_schema(args.schema);
    out << "schema: " << schema.size() << " relations, NA = '" << schema.label(schema.na_index()) << "'\n";
    if (!args.bags.empty()) out << "bags: " << load_bags(args.bags, schema).size() << " records ok\n";
    if (!args.rc.empty()) out << "rc-scores: " << load_rc(args.rc, schema).size() << " records ok\n";
    if (!args.pred.empty()) {
        auto in = open_input(args.pred);
        out << "predictions: " << parse_updated_predictions(in, schema).size() << " records ok\n";
    }
    return kSuccess;
}

struct GenQaArgs {
    std::string bags;
    std::string schema;
    std::string out;
    std::size_t neg_per_pos = kDefaultNegativesPerPositive;
    std::size_t window = kDefaultWindow;
    std::uint64_t seed = 0;
};

int cmd_gen_qa(const GenQaArgs& args, std::ostream& out, std::ostream& err) {
    const auto schema = load_schema(args.schema);
    const auto bags = load_bags(args.bags, schema);
    QaDatasetOptions options{args.neg_per_pos, args.window, args.seed};
    const auto dataset = generate_qa_dataset(bags, schema, options);
    write_file(args.out, [&](std::ostream& o) {
        for (const auto& s : dataset.samples) write_qa_sample(o, s);
    });
    if (dataset.skipped_bags > 0) {
        err << "warning: skipped " << dataset.skipped_bags << " bags with no tail mention in their context\n";
    }

    Manifest manifest("gen-qa");
    manifest.config() = {{"neg_per_pos", args.neg_per_pos}, {"window", args.window}, {"seed", args.seed}};
    manifest.input("schema", args.schema);
    manifest.input("bags", args.bags);
    manifest.write_for(args.out);

    const auto answerable = std::count_if(dataset.samples.begin(), dataset.samples.end(),
                                          [](const QaSample& s) { return s.answerable; });
    out << "wrote " << dataset.samples.size() << " samples (" << answerable << " answerable) to " << args.out << '\n';
    return kSuccess;
}

struct ValidateArgs {
    std::string bags;
    std::string schema;
    std::string rc;
    std::string scorer;
    std::string strategy = "I";
    std::string out;
    double alpha = 10.0;
    double beta = 20.0;
    std::size_t k = 3;
    double lambda = 10.0;
    double c = 0.9;
    std::size_t window = kDefaultWindow;
    std::size_t parallelism = 0;
    long timeout_ms = 30000;
    CLI::Option* alpha_opt = nullptr;
    CLI::Option* beta_opt = nullptr;
    CLI::Option* k_opt = nullptr;
};

ValidationConfig validation_config(const ValidateArgs& args) {
    ValidationConfig config;
    config.lambda = args.lambda;
    config.c = args.c;
    if (args.strategy == "I") {
        if (args.k_opt->count() > 0) throw UsageError("--k applies to strategy II only");
        config.strategy = QaExtremesSelection{args.alpha, args.beta};
    } else {
        if (args.alpha_opt->count() > 0 || args.beta_opt->count() > 0) {
            throw UsageError("--alpha/--beta apply to strategy I only");
        }
        config.strategy = RcTopKSelection{args.k};
    }
    return config;
}

int cmd_validate(const ValidateArgs& args, std::ostream& out) {
    const auto schema = load_schema(args.schema);
    const auto config = validation_config(args);
    try {
        config.check(schema);
    } catch (const ConfigError& e) {
        throw UsageError(e.what());
    }
    const auto bags = load_bags(args.bags, schema);
    const auto rc = load_rc(args.rc, schema);
    const auto scorer_cfg = parse_scorer(args.scorer, bags, schema, std::chrono::milliseconds(args.timeout_ms));
    auto scorer = make_scorer(scorer_cfg.spec, schema);

    const auto updated =
        validate_dataset(bags, rc, *scorer, config, schema, args.parallelism, EngineOptions{args.window});
    write_file(args.out, [&](std::ostream& o) {
        for (const auto& p : updated) write_updated_prediction(o, p);
    });

    Manifest manifest("validate");
    auto& cfg = manifest.config();
    cfg["strategy"] = args.strategy;
    if (args.strategy == "I") {
        cfg["alpha"] = args.alpha;
        cfg["beta"] = args.beta;
    } else {
        cfg["k"] = args.k;
    }
    cfg["lambda"] = args.lambda;
    cfg["c"] = args.c;
    cfg["window"] = args.window;
    cfg["scorer"] = scorer_cfg.description;
    manifest.input("schema", args.schema);
    manifest.input("bags", args.bags);
    manifest.input("rc_scores", args.rc);
    if (scorer_cfg.facts_path) manifest.input("facts", *scorer_cfg.facts_path);
    manifest.set_deterministic(scorer->deterministic());
    manifest.write_for(args.out);

    std::size_t validated = 0;
    for (const auto& p : updated) validated += std::count(p.validated.begin(), p.validated.end(), true);
    out << "validated " << validated << " relation scores over " << updated.size() << " bags; wrote " << args.out
        << '\n';
    return kSuccess;
}

struct EvalArgs {
    std::string pred;
    std::string bags;
    std::string schema;
    std::vector<std::size_t> cutoffs{100, 200, 300};
    std::string pr_out;
};

std::vector<ScoredBag> load_any_predictions(const std::string& path, const RelationSchema& schema) {
    const std::string text = read_file(path);
    std::istringstream lines(text);
    bool updated_format = false;
    for (std::string line; std::getline(lines, line);) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto doc = nlohmann::json::parse(line, nullptr, false);
        updated_format = doc.is_object() && doc.contains("validated");
        break;
    }
    std::istringstream in(text);
    try {
        if (updated_format) return scored_bags(parse_updated_predictions(in, schema));
        std::vector<RcPrediction> rc;
        for (auto& [id, p] : parse_rc_predictions(in, schema)) rc.push_back(std::move(p));
        return scored_bags(rc);
    } catch (const ParseError& e) {
        throw Error(path + ": " + e.what());
    }
}

int cmd_eval(const EvalArgs& args, std::ostream& out) {
    const auto schema = load_schema(args.schema);
    const auto bags = load_bags(args.bags, schema);
    const auto predictions = load_any_predictions(args.pred, schema);
    const auto facts = collect_fact_predictions(predictions, bags, schema);
    const std::size_t gold = count_gold_facts(bags, schema);
    if (gold == 0) throw Error("the bag file contains no gold non-NA facts");
    const auto report = evaluate(facts, gold, args.cutoffs);
    out << to_json(report) << '\n';

    if (!args.pr_out.empty()) {
        const auto curve = pr_curve(facts, gold);
        write_file(args.pr_out, [&](std::ostream& o) { write_pr_curve(o, curve); });
        Manifest manifest("eval");
        manifest.config() = {{"pn", args.cutoffs}};
        manifest.input("schema", args.schema);
        manifest.input("bags", args.bags);
        manifest.input("pred", args.pred);
        manifest.write_for(args.pr_out);
    }
    return kSuccess;
}

struct CompareArgs {
    std::string before;
    std::string after;
};

int cmd_compare(const CompareArgs& args, std::ostream& out) {
    const auto before = metrics_from_json(read_file(args.before));
    const auto after = metrics_from_json(read_file(args.after));
    out << to_json(compare_reports(before, after)) << '\n';
    return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Relation-extraction validation with extractive QA scores", "qaval"};
    app.set_config("--config", "", "TOML config file; [command] sections, flags override");
    app.set_version_flag("--version", QAVAL_VERSION);
    app.require_subcommand(1);

    SynthArgs synth;
    auto* synth_cmd = app.add_subcommand("synth", "Write a seeded synthetic dataset (schema, bags, RC scores)");
    synth_cmd->add_option("--out-dir", synth.out_dir, "Output directory")->required();
    synth_cmd->add_option("--bags", synth.options.n_bags, "Number of bags")->capture_default_str();
    synth_cmd->add_option("--relations", synth.options.n_relations, "Relations including NA")
        ->check(CLI::Range(2, 100000))
        ->capture_default_str();
    synth_cmd->add_option("--na-fraction", synth.options.na_fraction)->check(CLI::Range(0.0, 1.0))->capture_default_str();
    synth_cmd->add_option("--flip-fraction", synth.options.flip_fraction)
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    synth_cmd->add_option("--seed", synth.options.seed)->capture_default_str();

    CheckArgs check;
    auto* check_cmd = app.add_subcommand("check", "Validate input files against the documented formats");
    check_cmd->add_option("--schema", check.schema, "Schema file")->required();
    check_cmd->add_option("--bags", check.bags, "Bag file");
    check_cmd->add_option("--rc-scores", check.rc, "RC prediction file");
    check_cmd->add_option("--pred", check.pred, "Updated prediction file");

    GenQaArgs gen;
    auto* gen_cmd = app.add_subcommand("gen-qa", "Generate the QA sample file from bags");
    gen_cmd->add_option("--bags", gen.bags, "Bag file")->required();
    gen_cmd->add_option("--schema", gen.schema, "Schema file")->required();
    gen_cmd->add_option("--out", gen.out, "QA sample output file")->required();
    gen_cmd->add_option("--neg-per-pos", gen.neg_per_pos, "Unanswerable samples per answerable one")
        ->capture_default_str();
    gen_cmd->add_option("--window", gen.window, "Tokens kept around the entity pair")->capture_default_str();
    gen_cmd->add_option("--seed", gen.seed)->capture_default_str();

    ValidateArgs val;
    auto* val_cmd = app.add_subcommand("validate", "Update RC scores with QA validation scores");
    val_cmd->add_option("--bags", val.bags, "Bag file")->required();
    val_cmd->add_option("--schema", val.schema, "Schema file")->required();
    val_cmd->add_option("--rc-scores", val.rc, "RC prediction file")->required();
    val_cmd->add_option("--scorer", val.scorer, "synthetic[:noise=X,seed=N,facts=PATH] | remote:<endpoint>")
        ->required();
    val_cmd->add_option("--strategy", val.strategy, "I (QA extremes) or II (RC top-k)")
        ->check(CLI::IsMember({"I", "II"}))
        ->capture_default_str();
    val_cmd->add_option("--out", val.out, "Updated prediction output file")->required();
    val.alpha_opt = val_cmd->add_option("--alpha", val.alpha, "Strategy I: top percent")->capture_default_str();
    val.beta_opt = val_cmd->add_option("--beta", val.beta, "Strategy I: bottom percent")->capture_default_str();
    val.k_opt = val_cmd->add_option("--k", val.k, "Strategy II: relations validated")->capture_default_str();
    val_cmd->add_option("--lambda", val.lambda, "QA weight")->capture_default_str();
    val_cmd->add_option("--c", val.c, "Score assumed for unvalidated relations")->capture_default_str();
    val_cmd->add_option("--window", val.window)->capture_default_str();
    val_cmd->add_option("--parallelism", val.parallelism, "Worker threads (0 = all cores)")->capture_default_str();
    val_cmd->add_option("--timeout-ms", val.timeout_ms, "Remote request timeout")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    EvalArgs eval;
    auto* eval_cmd = app.add_subcommand("eval", "Compute AUC and precision@N for a prediction file");
    eval_cmd->add_option("--pred", eval.pred, "RC or updated prediction file")->required();
    eval_cmd->add_option("--bags", eval.bags, "Bag file with gold labels")->required();
    eval_cmd->add_option("--schema", eval.schema, "Schema file")->required();
    eval_cmd->add_option("--pn", eval.cutoffs, "Precision@N cutoffs")
        ->delimiter(',')
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    eval_cmd->add_option("--pr-out", eval.pr_out, "PR curve output file");

    CompareArgs cmp;
    auto* cmp_cmd = app.add_subcommand("compare", "Diff two metrics reports");
    cmp_cmd->add_option("--before", cmp.before)->required();
    cmp_cmd->add_option("--after", cmp.after)->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kSuccess;
    } catch (const CLI::CallForVersion&) {
        out << QAVAL_VERSION << '\n';
        return kSuccess;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n";
        auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
        err << sub->help();
        return kUsageError;
    }

    try {
        if (synth_cmd->parsed()) return cmd_synth(synth, out);
        if (check_cmd->parsed()) return cmd_check(check, out);
        if (gen_cmd->parsed()) return cmd_gen_qa(gen, out, err);
        if (val_cmd->parsed()) return cmd_validate(val, out);
        if (eval_cmd->parsed()) return cmd_eval(eval, out);
        if (cmp_cmd->parsed()) return cmd_compare(cmp, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kUsageError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kRuntimeFailure;
    }
    return kUsageError;
}

}  // namespace qaval::cli
