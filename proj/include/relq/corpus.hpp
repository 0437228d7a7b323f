#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "relq/engine.hpp"

namespace relq::corpus {

// One executable task: transformation source, input model, golden output and
// the expected declaration counts ("relations[/queries[/natives]]").
struct TaskFixture {
    std::string id;
    std::string title;
    std::string tdsl_file;
    std::string input_model;
    std::string golden_file;
    std::string expected_counts;
};

const std::vector<TaskFixture>& task_fixtures();
const TaskFixture& fixture(const std::string& task_id);

// Metamodels and the model are heap-held: models point at their metamodel,
// so the addresses must stay stable while the task moves around.
struct LoadedTask {
    Transformation tf;
    std::shared_ptr<const Metamodel> source_mm;
    std::shared_ptr<const Metamodel> target_mm;
    std::shared_ptr<const Model> input;
};

// Parses and checks the task's transformation, loads its metamodels (by name
// from <dir>/metamodels) and input model. Throws on any diagnostic.
LoadedTask load_task(const std::filesystem::path& corpus_dir, const TaskFixture& fx);

struct TaskRunResult {
    std::string output;
    ExecutionReport report;
    int relations = 0;
    int queries = 0;
    int natives = 0;
    DiffModel diff; // in-place tasks only
};

TaskRunResult run_task(const std::filesystem::path& corpus_dir, const std::string& task_id,
                       const std::map<std::string, std::string>& param_overrides = {});

// Formats declaration counts the way the task table reports them: trailing
// zero sections dropped ("1", "2/1", "2/5/2").
std::string format_counts(int relations, int queries, int natives);

// Runs every task, compares against the golden files, and renders the
// summary table (one row per task: name, counts, elapsed, status).
std::string corpus_table(const std::filesystem::path& corpus_dir, bool& all_pass);

// Reference fixtures, constructed programmatically against the built-in
// SimpleGraph metamodel. The .xmi files under <dir>/models hold the same
// content.
const Metamodel& simple_graph_mm();
Model reference_graph_g1();
Model dangling_graph_g2();

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);

} // namespace relq::corpus
