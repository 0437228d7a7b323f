#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "relq/corpus.hpp"
#include "relq/engine.hpp"
#include "relq/xmi.hpp"

namespace fs = std::filesystem;
using namespace relq;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDiagnostics = 1;
constexpr int kExitError = 2;

// Metamodels are located by name: an explicit --mm-dir wins, then the
// transformation file's directory, then its sibling metamodels/ directory.
fs::path find_metamodel(const std::string& name, const fs::path& tdsl_path,
                        const fs::path& mm_dir) {
    std::vector<fs::path> candidates;
    if (!mm_dir.empty()) candidates.push_back(mm_dir / (name + ".mm"));
    fs::path base = tdsl_path.parent_path();
    candidates.push_back(base / (name + ".mm"));
    candidates.push_back(base / ".." / "metamodels" / (name + ".mm"));
    for (const fs::path& p : candidates)
        if (fs::exists(p)) return p;
    throw Error("cannot find metamodel '" + name + ".mm' near " + tdsl_path.string());
}

std::map<std::string, Value> parse_overrides(const Transformation& tf,
                                             const std::vector<std::string>& raw) {
    std::map<std::string, Value> out;
    for (const std::string& kv : raw) {
        auto pos = kv.find('=');
        if (pos == std::string::npos) throw Error("--param expects k=v, got '" + kv + "'");
        std::string name = kv.substr(0, pos);
        std::string text = kv.substr(pos + 1);
        const ConfigParam* decl = nullptr;
        for (const auto& p : tf.config.params)
            if (p.name == name) decl = &p;
        if (!decl) throw Error("unknown parameter '" + name + "'");
        out[name] = parse_param_value(decl->type, text);
    }
    return out;
}

fs::path default_inplace_output(const fs::path& input) {
    fs::path out = input;
    if (out.extension() == ".xmi") out.replace_extension();
    out += ".out.xmi";
    return out;
}

int cmd_run(const std::string& tdsl_file, const std::string& in_file, std::string out_file,
            const std::vector<std::string>& raw_params, const std::string& emit,
            const std::string& mm_dir) {
    Transformation tf = parse_transformation(corpus::read_file(tdsl_file));
    Metamodel source_mm = parse_metamodel(
        corpus::read_file(find_metamodel(tf.config.source_mm, tdsl_file, mm_dir)));
    Metamodel target_mm = parse_metamodel(
        corpus::read_file(find_metamodel(tf.config.target_mm, tdsl_file, mm_dir)));

    std::vector<Diagnostic> diags = check_transformation(tf, source_mm, target_mm);
    if (!diags.empty()) {
        for (const Diagnostic& d : diags) std::cout << to_string(d) << "\n";
        std::cout << diags.size() << " diagnostics\n";
        return kExitDiagnostics;
    }

    OutputFormat format = tf.config.output;
    if (emit == "xmi") format = OutputFormat::Xmi;
    else if (emit == "html") format = OutputFormat::Html;

    Model input = read_model(corpus::read_file(in_file), source_mm);
    std::map<std::string, Value> params = parse_overrides(tf, raw_params);

    std::string output;
    ExecutionReport report;
    if (tf.config.in_place) {
        InPlaceResult r = execute_in_place(tf, source_mm, input, params);
        output = write_model(r.result, format);
        report = std::move(r.report);
        if (out_file.empty()) out_file = default_inplace_output(in_file).string();
    } else {
        if (out_file.empty()) throw Error("--out is required for model-to-model runs");
        ExecResult r = execute(tf, source_mm, target_mm, input, params);
        output = write_model(r.target, format);
        report = std::move(r.report);
    }
    corpus::write_file(out_file, output);
    std::cout << tf.name << ": " << report.summary() << "\n" << report.structured();
    std::cout << "wrote " << out_file << "\n";
    return kExitOk;
}

int cmd_check(const std::string& tdsl_file, const std::string& source_mm_file,
              const std::string& target_mm_file, const std::string& mm_dir) {
    Transformation tf = parse_transformation(corpus::read_file(tdsl_file));
    fs::path src_path = source_mm_file.empty()
                            ? find_metamodel(tf.config.source_mm, tdsl_file, mm_dir)
                            : fs::path(source_mm_file);
    fs::path trg_path = target_mm_file.empty()
                            ? find_metamodel(tf.config.target_mm, tdsl_file, mm_dir)
                            : fs::path(target_mm_file);
    Metamodel source_mm = parse_metamodel(corpus::read_file(src_path));
    Metamodel target_mm = parse_metamodel(corpus::read_file(trg_path));
    std::vector<Diagnostic> diags = check_transformation(tf, source_mm, target_mm);
    for (const Diagnostic& d : diags) std::cout << to_string(d) << "\n";
    std::cout << diags.size() << " diagnostics\n";
    return diags.empty() ? kExitOk : kExitDiagnostics;
}

int cmd_corpus(const std::string& dir) {
    bool all_pass = false;
    std::cout << corpus::corpus_table(dir, all_pass);
    return all_pass ? kExitOk : kExitDiagnostics;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"relq - relational model transformation runner"};
    app.require_subcommand(1);

    std::string tdsl_file, in_file, out_file, emit, mm_dir;
    std::vector<std::string> raw_params;
    auto* run = app.add_subcommand("run", "execute a transformation over a model");
    run->add_option("transformation", tdsl_file, "transformation (.tdsl)")->required();
    run->add_option("--in", in_file, "input model (.xmi)")->required();
    run->add_option("--out", out_file, "output path");
    run->add_option("--param", raw_params, "parameter override k=v");
    run->add_option("--emit", emit, "output format")->check(CLI::IsMember({"xmi", "html"}));
    run->add_option("--mm-dir", mm_dir, "metamodel directory");

    std::string check_file, source_mm_file, target_mm_file, check_mm_dir;
    auto* check = app.add_subcommand("check", "validate a transformation");
    check->add_option("transformation", check_file, "transformation (.tdsl)")->required();
    check->add_option("--source-mm", source_mm_file, "source metamodel file");
    check->add_option("--target-mm", target_mm_file, "target metamodel file");
    check->add_option("--mm-dir", check_mm_dir, "metamodel directory");

    std::string corpus_dir = "corpus";
    auto* corpus_cmd = app.add_subcommand("corpus", "run the built-in task corpus");
    corpus_cmd->add_option("--dir", corpus_dir, "corpus directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed())
            return cmd_run(tdsl_file, in_file, out_file, raw_params, emit, mm_dir);
        if (check->parsed())
            return cmd_check(check_file, source_mm_file, target_mm_file, check_mm_dir);
        return cmd_corpus(corpus_dir);
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDiagnostics;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
}
