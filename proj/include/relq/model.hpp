#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "relq/metamodel.hpp"
#include "relq/value.hpp"

namespace relq {

// One element of a model: identity, class, attribute values and reference
// target lists. Containment bookkeeping (container_id/container_ref) is
// maintained by Model's mutation API, never set directly.
struct Element {
    std::string id;
    std::string class_name;
    std::map<std::string, Value> attrs;
    std::map<std::string, std::vector<std::string>> refs;
    std::string container_id;  // empty = root
    std::string container_ref;

    bool has_ref(std::string_view name) const;
    const std::vector<std::string>& ref(std::string_view name) const;

    friend bool operator==(const Element& a, const Element& b);
};

// In-memory model store. Elements are owned by the model and addressed by
// id; containment forms a forest whose roots are kept in insertion order.
// Instances are safe to share read-only; mutation assumes a single writer.
class Model {
public:
    explicit Model(const Metamodel& mm) : mm_(&mm) {}

    const Metamodel& metamodel() const { return *mm_; }
    const std::string& metamodel_name() const { return mm_->name(); }
    const std::vector<std::string>& roots() const { return roots_; }
    std::size_t size() const { return elements_.size(); }

    const Element* find(std::string_view id) const;
    const Element& require(std::string_view id) const;
    bool contains(std::string_view id) const { return find(id) != nullptr; }

    // Adds a root element. Throws on duplicate id or unknown class.
    Element& add_element(std::string id, std::string class_name);

    void set_attr(std::string_view id, std::string attr, Value v);
    void clear_attr(std::string_view id, std::string_view attr);

    // Replaces a reference's target list. For containment references this
    // re-parents the targets (removing them from former containers or the
    // root list); targets dropped from a containment list become roots.
    void set_ref(std::string_view id, std::string_view ref, std::vector<std::string> targets);
    void add_ref_member(std::string_view id, std::string_view ref, const std::string& target);
    void clear_ref(std::string_view id, std::string_view ref);

    // Erases one element and removes every reference to it (containment
    // lists included). Children of a removed container become roots; cascade
    // deletion is the caller's business.
    void erase_element(std::string_view id);

    // Containment pre-order starting from the roots; children are visited
    // per containment reference in metamodel declaration order, list order
    // within each reference.
    std::vector<const Element*> document_order() const;

    std::vector<const Element*> elements_of_class(std::string_view class_name,
                                                  bool include_subclasses) const;

    // Unique element of the class (subclasses included) whose key property
    // ("xmi:id" or a declared attribute) equals key_value. Returns nullptr
    // if absent; throws EngineError when two elements share the key.
    const Element* key_lookup(std::string_view class_name, std::string_view key_prop,
                              const Value& key_value) const;

    std::vector<std::string> element_ids() const;

    friend bool operator==(const Model& a, const Model& b);

private:
    Element& require_mut(std::string_view id);
    void unparent(const std::string& child_id);
    void make_root(const std::string& id);
    void drop_root(const std::string& id);

    const Metamodel* mm_;
    std::vector<std::string> roots_;
    std::map<std::string, Element> elements_;
};

// Conformance diagnostics: declared properties only, attribute types match,
// reference targets resolve and conform, multiplicity bounds hold,
// containment is a forest. Empty result means the model is valid.
std::vector<Diagnostic> validate_model(const Model& m, const Metamodel& mm);

} // namespace relq
