#include "relq/metamodel.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace relq {

const char* to_string(PrimType t) {
    switch (t) {
    case PrimType::String: return "string";
    case PrimType::Int: return "int";
    case PrimType::Bool: return "bool";
    }
    return "?";
}

Metamodel::Metamodel(std::string name, std::vector<ClassDef> classes)
    : name_(std::move(name)), classes_(std::move(classes)) {
    for (std::size_t i = 0; i < classes_.size(); ++i) {
        if (!index_.emplace(classes_[i].name, i).second)
            throw Error("duplicate class name '" + classes_[i].name + "' in metamodel " + name_);
    }
    validate();
}

const ClassDef* Metamodel::find_class(std::string_view name) const {
    auto it = index_.find(std::string(name));
    return it == index_.end() ? nullptr : &classes_[it->second];
}

const ClassDef& Metamodel::require_class(std::string_view name) const {
    const ClassDef* c = find_class(name);
    if (!c) throw Error("unknown class '" + std::string(name) + "' in metamodel " + name_);
    return *c;
}

bool Metamodel::is_subclass_of(std::string_view sub, std::string_view super) const {
    const ClassDef* c = find_class(sub);
    while (c) {
        if (c->name == super) return true;
        c = c->superclass.empty() ? nullptr : find_class(c->superclass);
    }
    return false;
}

const AttrDef* Metamodel::find_attr(std::string_view class_name, std::string_view attr) const {
    const ClassDef* c = find_class(class_name);
    while (c) {
        for (const auto& a : c->attributes)
            if (a.name == attr) return &a;
        c = c->superclass.empty() ? nullptr : find_class(c->superclass);
    }
    return nullptr;
}

const RefDef* Metamodel::find_ref(std::string_view class_name, std::string_view ref) const {
    const ClassDef* c = find_class(class_name);
    while (c) {
        for (const auto& r : c->references)
            if (r.name == ref) return &r;
        c = c->superclass.empty() ? nullptr : find_class(c->superclass);
    }
    return nullptr;
}

std::vector<const RefDef*> Metamodel::all_refs(std::string_view class_name) const {
    std::vector<const ClassDef*> chain;
    const ClassDef* c = find_class(class_name);
    while (c) {
        chain.push_back(c);
        c = c->superclass.empty() ? nullptr : find_class(c->superclass);
    }
    std::vector<const RefDef*> out;
    for (auto it = chain.rbegin(); it != chain.rend(); ++it)
        for (const auto& r : (*it)->references) out.push_back(&r);
    return out;
}

std::vector<const AttrDef*> Metamodel::all_attrs(std::string_view class_name) const {
    std::vector<const ClassDef*> chain;
    const ClassDef* c = find_class(class_name);
    while (c) {
        chain.push_back(c);
        c = c->superclass.empty() ? nullptr : find_class(c->superclass);
    }
    std::vector<const AttrDef*> out;
    for (auto it = chain.rbegin(); it != chain.rend(); ++it)
        for (const auto& a : (*it)->attributes) out.push_back(&a);
    return out;
}

void Metamodel::validate() const {
    for (const auto& c : classes_) {
        if (!c.superclass.empty() && !find_class(c.superclass))
            throw Error("class '" + c.name + "' extends unknown class '" + c.superclass + "'");
    }
    // Acyclic superclass chains.
    for (const auto& c : classes_) {
        std::set<std::string> seen{c.name};
        const ClassDef* cur = &c;
        while (!cur->superclass.empty()) {
            if (!seen.insert(cur->superclass).second)
                throw Error("cyclic inheritance involving class '" + c.name + "'");
            cur = find_class(cur->superclass);
        }
    }
    for (const auto& c : classes_) {
        for (const auto& r : c.references) {
            if (!find_class(r.target_class))
                throw Error("unknown reference target '" + r.target_class + "' in class '" +
                            c.name + "'");
        }
        // Property names unique including inherited ones.
        std::set<std::string> names;
        for (const AttrDef* a : all_attrs(c.name))
            if (!names.insert(a->name).second)
                throw Error("duplicate property '" + a->name + "' in class '" + c.name + "'");
        for (const RefDef* r : all_refs(c.name))
            if (!names.insert(r->name).second)
                throw Error("duplicate property '" + r->name + "' in class '" + c.name + "'");
    }
}

namespace {

std::vector<std::string> tokenize_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char ch = line[i];
        if (ch == '/' && i + 1 < line.size() && line[i + 1] == '/') break;
        if (ch == ' ' || ch == '\t' || ch == '\r') {
            if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
        } else if (ch == ':') {
            if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
            out.push_back(":");
        } else {
            cur += ch;
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

} // namespace

Metamodel parse_metamodel(std::string_view text) {
    std::string name;
    std::vector<ClassDef> classes;
    ClassDef* current = nullptr;

    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto tok = tokenize_line(line);
        if (tok.empty()) continue;
        const std::string& kw = tok[0];

        if (kw == "metamodel") {
            if (tok.size() != 2) throw ParseError("expected: metamodel <Name>", lineno, 1);
            if (!name.empty()) throw ParseError("duplicate metamodel header", lineno, 1);
            name = tok[1];
        } else if (kw == "class") {
            if (tok.size() < 2) throw ParseError("expected: class <Name>", lineno, 1);
            ClassDef c;
            c.name = tok[1];
            std::size_t i = 2;
            if (i < tok.size() && tok[i] == "abstract") {
                c.is_abstract = true;
                ++i;
            }
            if (i < tok.size() && tok[i] == "extends") {
                if (i + 1 >= tok.size()) throw ParseError("extends needs a class name", lineno, 1);
                c.superclass = tok[i + 1];
                i += 2;
            }
            if (i != tok.size()) throw ParseError("unexpected token '" + tok[i] + "'", lineno, 1);
            classes.push_back(std::move(c));
            current = &classes.back();
        } else if (kw == "attr") {
            if (!current) throw ParseError("attr outside a class", lineno, 1);
            if (tok.size() != 4 || tok[2] != ":")
                throw ParseError("expected: attr <name>: string|int|bool", lineno, 1);
            AttrDef a;
            a.name = tok[1];
            if (tok[3] == "string") a.type = PrimType::String;
            else if (tok[3] == "int") a.type = PrimType::Int;
            else if (tok[3] == "bool") a.type = PrimType::Bool;
            else throw ParseError("unknown attribute type '" + tok[3] + "'", lineno, 1);
            current->attributes.push_back(std::move(a));
        } else if (kw == "ref") {
            if (!current) throw ParseError("ref outside a class", lineno, 1);
            if (tok.size() < 4 || tok[2] != ":")
                throw ParseError("expected: ref <name>: <Class> [0..1|*] [containment]", lineno, 1);
            RefDef r;
            r.name = tok[1];
            r.target_class = tok[3];
            std::size_t i = 4;
            if (i < tok.size() && (tok[i] == "0..1" || tok[i] == "*")) {
                r.many = tok[i] == "*";
                ++i;
            }
            if (i < tok.size() && tok[i] == "containment") {
                r.containment = true;
                ++i;
            }
            if (i != tok.size()) throw ParseError("unexpected token '" + tok[i] + "'", lineno, 1);
            current->references.push_back(std::move(r));
        } else {
            throw ParseError("unexpected keyword '" + kw + "'", lineno, 1);
        }
    }
    if (name.empty()) throw ParseError("missing 'metamodel <Name>' header");
    return Metamodel(std::move(name), std::move(classes));
}

} // namespace relq
