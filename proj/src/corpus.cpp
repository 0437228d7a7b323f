#include "relq/corpus.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "relq/xmi.hpp"

namespace relq::corpus {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write file: " + path.string());
    out << content;
}

const std::vector<TaskFixture>& task_fixtures() {
    static const std::vector<TaskFixture> fixtures = {
        {"hello", "Hello world (constant)", "hello.tdsl", "g1.xmi", "hello.xmi", "1"},
        {"hello_ext", "Hello world (extended constant)", "hello_ext.tdsl", "g1.xmi",
         "hello_ext.xmi", "1"},
        {"hello_text", "Hello world (model-to-text)", "hello_text.tdsl", "greetingext.xmi",
         "hello_text.html", "1"},
        {"count", "Count matches", "count.tdsl", "g1.xmi", "count.xmi", "2/5/2"},
        {"reverse", "Reverse edges", "reverse.tdsl", "g1.xmi", "reverse.xmi", "3"},
        {"migrate", "Simple migration", "migrate.tdsl", "g1.xmi", "migrate.xmi", "3"},
        {"topology", "Topology-changing migration", "topology.tdsl", "g1.xmi", "topology.xmi",
         "2/1"},
        {"delete", "Delete node", "delete.tdsl", "g1.xmi", "delete.xmi", "2"},
        {"transitive", "Insert transitive edges", "transitive.tdsl", "g1.xmi", "transitive.xmi",
         "5/2"},
    };
    return fixtures;
}

const TaskFixture& fixture(const std::string& task_id) {
    for (const TaskFixture& fx : task_fixtures())
        if (fx.id == task_id) return fx;
    throw Error("unknown task '" + task_id + "'");
}

LoadedTask load_task(const fs::path& corpus_dir, const TaskFixture& fx) {
    LoadedTask out;
    out.tf = parse_transformation(read_file(corpus_dir / "tasks" / fx.tdsl_file));
    out.source_mm = std::make_shared<Metamodel>(
        parse_metamodel(read_file(corpus_dir / "metamodels" / (out.tf.config.source_mm + ".mm"))));
    out.target_mm = std::make_shared<Metamodel>(
        parse_metamodel(read_file(corpus_dir / "metamodels" / (out.tf.config.target_mm + ".mm"))));
    std::vector<Diagnostic> diags = check_transformation(out.tf, *out.source_mm, *out.target_mm);
    if (!diags.empty())
        throw Error("task " + fx.id + " fails its check: " + to_string(diags.front()));
    out.input = std::make_shared<Model>(
        read_model(read_file(corpus_dir / "models" / fx.input_model), *out.source_mm));
    return out;
}

TaskRunResult run_task(const fs::path& corpus_dir, const std::string& task_id,
                       const std::map<std::string, std::string>& param_overrides) {
    const TaskFixture& fx = fixture(task_id);
    LoadedTask task = load_task(corpus_dir, fx);

    std::map<std::string, Value> params;
    for (const auto& [name, text] : param_overrides) {
        const ConfigParam* decl = nullptr;
        for (const auto& p : task.tf.config.params)
            if (p.name == name) decl = &p;
        if (!decl) throw EngineError("unknown parameter '" + name + "'");
        params[name] = parse_param_value(decl->type, text);
    }

    TaskRunResult out;
    out.relations = static_cast<int>(task.tf.relations.size());
    out.queries = static_cast<int>(task.tf.queries.size());
    out.natives = static_cast<int>(task.tf.natives.size());

    if (task.tf.config.in_place) {
        InPlaceResult r = execute_in_place(task.tf, *task.source_mm, *task.input, params);
        out.output = write_model(r.result, task.tf.config.output);
        out.report = std::move(r.report);
        out.diff = std::move(r.diff);
    } else {
        ExecResult r = execute(task.tf, *task.source_mm, *task.target_mm, *task.input, params);
        out.output = write_model(r.target, task.tf.config.output);
        out.report = std::move(r.report);
    }
    return out;
}

std::string format_counts(int relations, int queries, int natives) {
    std::string out = std::to_string(relations);
    if (queries > 0 || natives > 0) out += "/" + std::to_string(queries);
    if (natives > 0) out += "/" + std::to_string(natives);
    return out;
}

std::string corpus_table(const fs::path& corpus_dir, bool& all_pass) {
    std::ostringstream out;
    all_pass = true;
    out << std::left << std::setw(34) << "task" << std::setw(10) << "counts" << std::setw(8)
        << "ms" << "status" << "\n";
    for (const TaskFixture& fx : task_fixtures()) {
        std::string counts, status;
        std::int64_t ms = 0;
        try {
            TaskRunResult r = run_task(corpus_dir, fx.id);
            counts = format_counts(r.relations, r.queries, r.natives);
            ms = r.report.elapsed_ms;
            std::string golden = read_file(corpus_dir / "golden" / fx.golden_file);
            bool ok = r.output == golden && counts == fx.expected_counts;
            status = ok ? "ok" : "FAIL";
            if (!ok) all_pass = false;
        } catch (const std::exception& e) {
            counts = "-";
            status = std::string("FAIL (") + e.what() + ")";
            all_pass = false;
        }
        out << std::left << std::setw(34) << fx.title << std::setw(10) << counts << std::setw(8)
            << ms << status << "\n";
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Reference fixtures

namespace {

constexpr const char* kSimpleGraphMm = R"(metamodel SimpleGraph
class Graph
  ref nodes: Node * containment
  ref edges: Edge * containment
class Node
  attr name: string
class Edge
  ref src: Node 0..1
  ref trg: Node 0..1
)";

} // namespace

const Metamodel& simple_graph_mm() {
    static const Metamodel mm = parse_metamodel(kSimpleGraphMm);
    return mm;
}

Model reference_graph_g1() {
    const Metamodel& mm = simple_graph_mm();
    Model m(mm);
    m.add_element("g1", "Graph");
    std::vector<std::string> nodes;
    for (int i = 1; i <= 8; ++i) {
        std::string id = "n" + std::to_string(i);
        m.add_element(id, "Node");
        m.set_attr(id, "name", Value(id));
        nodes.push_back(id);
    }
    m.set_ref("g1", "nodes", nodes);
    struct EdgeSpec {
        const char* id;
        const char* src;
        const char* trg;
    };
    const EdgeSpec edges[] = {
        {"e1", "n1", "n2"}, {"e2", "n2", "n3"}, {"e3", "n3", "n1"}, {"e4", "n3", "n4"},
        {"e5", "n4", "n5"}, {"e6", "n5", "n3"}, {"e7", "n6", "n6"},
    };
    std::vector<std::string> edge_ids;
    for (const EdgeSpec& e : edges) {
        m.add_element(e.id, "Edge");
        m.set_ref(e.id, "src", {e.src});
        m.set_ref(e.id, "trg", {e.trg});
        edge_ids.push_back(e.id);
    }
    m.set_ref("g1", "edges", edge_ids);
    return m;
}

Model dangling_graph_g2() {
    const Metamodel& mm = simple_graph_mm();
    Model m(mm);
    m.add_element("g2", "Graph");
    m.add_element("m1", "Node");
    m.set_attr("m1", "name", Value("m1"));
    m.add_element("m2", "Node");
    m.set_attr("m2", "name", Value("m2"));
    m.set_ref("g2", "nodes", {"m1", "m2"});
    m.add_element("d1", "Edge");
    m.set_ref("d1", "src", {"m1"});
    m.add_element("d2", "Edge");
    m.set_ref("d2", "trg", {"m2"});
    m.set_ref("g2", "edges", {"d1", "d2"});
    return m;
}

} // namespace relq::corpus
