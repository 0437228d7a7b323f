#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "relq/model.hpp"
#include "relq/natives.hpp"
#include "relq/tdsl.hpp"

namespace relq {

struct ExecutionReport {
    std::map<std::string, int> fired; // relation name -> match count
    int created = 0;
    int removed = 0;
    int replaced = 0;
    std::int64_t elapsed_ms = 0;

    int total_fired() const;
    std::string summary() const;    // single line
    std::string structured() const; // key=value per line
};

// One edit against a model. Insert/replace carry the payload element;
// inserts additionally carry the containment slot they attach under (empty
// container_id = new root).
struct DiffOp {
    DiffKind kind = DiffKind::Remove;
    std::string target_id;
    std::optional<Element> payload;
    std::string container_id;
    std::string container_ref;
};

// Ordered edit script collected by an in-place run. Duplicate removes
// coalesce; two ops of different kinds on one id are a conflict.
class DiffModel {
public:
    void add(DiffOp op);
    const std::vector<DiffOp>& ops() const { return ops_; }
    std::vector<DiffOp>& ops() { return ops_; }
    bool empty() const { return ops_.empty(); }
    std::size_t size() const { return ops_.size(); }

private:
    std::vector<DiffOp> ops_;
};

// Applies a diff to a copy of `m`. Removes cascade to containment children
// (the expanded script is deterministic) and scrub every idref to a removed
// element; inserts attach under their recorded container; replaces swap the
// payload in wholesale. Throws EngineError on unknown ids, id collisions or
// conflicting ops.
Model apply_diff(const Model& m, const DiffModel& d);

// Cascade-expands removes and checks for conflicts; used by apply_diff and
// by execute_in_place before returning the collected script.
DiffModel normalize_diff(const Model& m, const DiffModel& d);

struct ExecResult {
    Model target;
    ExecutionReport report;
};

struct InPlaceResult {
    Model result;
    DiffModel diff;
    ExecutionReport report;
};

// Executes a model-to-model transformation: every top-level relation fires
// over all source matches in document order; target patterns are enforced
// with check-before-enforce identity (see enforce rules in engine.cpp).
// `initial_target` seeds the target model (pass the previous output to test
// idempotence); by default the target starts empty. Deterministic: equal
// inputs produce byte-identical serializations. Each execution owns its
// target exclusively; the source snapshot is only read.
ExecResult execute(const Transformation& t, const Metamodel& source_mm,
                   const Metamodel& target_mm, const Model& source,
                   const std::map<std::string, Value>& params = {},
                   const Model* initial_target = nullptr,
                   const NativeRegistry& natives = NativeRegistry::standard());

// Executes an in-place transformation: relations match against an immutable
// snapshot while their target patterns record DiffOps (per their diff
// markers, or insert/replace for plain enforcement); the collected diff is
// then normalized and applied in one step.
InPlaceResult execute_in_place(const Transformation& t, const Metamodel& mm, const Model& source,
                               const std::map<std::string, Value>& params = {},
                               const NativeRegistry& natives = NativeRegistry::standard());

// Evaluates a named query of `t` with positional arguments.
Value run_query(const Transformation& t, std::string_view query_name,
                const std::vector<Value>& args, const Model& source,
                const NativeRegistry& natives = NativeRegistry::standard());

// Enumerates every binding of the pattern's variables over `m`, root
// candidates in document order, slots left-to-right, members of multi-valued
// references in list order. `seed` may pre-bind the root variable (and any
// other variables, which then act as match constraints).
std::vector<Env> match_domain(const DomainPattern& p, const Model& m, const Env& seed);

// Target-pattern enforcement, exposed for tests. Owns the fresh-id counters
// and change accounting for one target model.
class Enforcer {
public:
    Enforcer(Model& target, const std::string& source_key, const std::string& target_key)
        : target_(target), source_key_(source_key), target_key_(target_key) {}

    // Enforces the template under `env` bindings and returns the element's
    // ref; binds the template variable in `env` when it was free.
    ElemRef enforce(const ObjectTemplate& t, Env& env);

    // Distinct elements created, and distinct pre-existing elements whose
    // properties changed.
    int created() const { return static_cast<int>(created_.size()); }
    int replaced() const { return static_cast<int>(updated_.size()); }

private:
    Value slot_value(const SlotExpr& slot, Env& env);
    std::string fresh_id(const std::string& class_name);
    void assign(const Element& el, const std::string& prop, const Value& v, bool& changed);

    Model& target_;
    std::string source_key_;
    std::string target_key_;
    std::map<std::string, int> counters_;
    std::set<std::string> created_;
    std::set<std::string> updated_;
};

// Typed parameter parsing for CLI-style overrides ("k=v" strings).
Value parse_param_value(const TypeRef& type, const std::string& text);
std::map<std::string, Value> resolve_params(const Transformation& t,
                                            const std::map<std::string, Value>& overrides);

} // namespace relq
