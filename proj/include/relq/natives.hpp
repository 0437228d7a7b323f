#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "relq/expr.hpp"
#include "relq/model.hpp"

namespace relq {

// Graph helpers over SimpleGraph-shaped models (classes Node/Edge, edge
// references src/trg). They are the engine's native function library,
// callable from transformations by name.

// Targets of every edge whose source is `nd`, in edge document order,
// duplicates retained, dangling targets skipped.
std::vector<ElemRef> linked_nodes(const Model& m, const ElemRef& nd);

// One step of the k-circle walk: for each cnd linked from nd, either closes
// the circle (counter = 0 and cnd is the walk's start) and emits the
// canonical key of `list`, or extends the walk (counter > 0, cnd not yet
// visited) with counter - 1. The canonical key is the member ids sorted
// ascending, joined with "|".
std::vector<std::string> circle_nodes(const Model& m, const ElemRef& nd,
                                      const std::vector<ElemRef>& list, std::int64_t counter);

// Number of distinct k-circles: union of circle_nodes(n, [n], k-1) over all
// nodes, counted as distinct canonical keys. Requires k >= 2.
std::int64_t all_circle_count(const Model& m, std::int64_t k);

// Compile-time registry exposing the functions above to transformations
// under their published names (GetLinkedNodes, GetCircleNodes,
// GetAllCircleNodes).
class NativeRegistry {
public:
    struct NativeFn {
        std::string name;
        std::size_t arity;
        Type result;
        std::function<Value(const std::vector<Value>&, const Env&)> call;
    };

    static const NativeRegistry& standard();

    const NativeFn* find(const std::string& name) const;
    void add(NativeFn fn);

private:
    std::map<std::string, NativeFn> fns_;
};

} // namespace relq
