#include "relq/xmi.hpp"

#include <algorithm>
#include <sstream>

namespace relq {

namespace {

std::string escape_xml(const std::string& s, bool attr) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"':
            if (attr) out += "&quot;";
            else out += c;
            break;
        default: out += c;
        }
    }
    return out;
}

std::string attr_text(const Value& v) {
    if (v.is_string()) return v.as_string();
    if (v.is_int()) return std::to_string(v.as_int());
    if (v.is_bool()) return v.as_bool() ? "true" : "false";
    throw EngineError("attribute value is not a scalar");
}

// ---------------------------------------------------------------------------
// Minimal XML reader, restricted to the dialect this engine writes: elements
// with attributes, nesting, self-closing tags, comments and an optional
// declaration. No text content, namespaces or CDATA.

struct XmlNode {
    std::string tag;
    std::vector<std::pair<std::string, std::string>> attrs;
    std::vector<XmlNode> children;
    int line = 0;

    const std::string* attr(const std::string& name) const {
        for (const auto& [k, v] : attrs)
            if (k == name) return &v;
        return nullptr;
    }
};

class XmlParser {
public:
    explicit XmlParser(std::string_view text) : text_(text) {}

    XmlNode parse_document() {
        skip_misc();
        if (peek() != '<') fail("expected document element");
        XmlNode root = parse_element();
        skip_misc();
        if (pos_ != text_.size()) fail("trailing content after document element");
        return root;
    }

private:
    char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }
    bool starts_with(std::string_view s) const { return text_.substr(pos_, s.size()) == s; }

    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError("XML: " + msg, line_, 0);
    }

    void advance(std::size_t n = 1) {
        for (std::size_t i = 0; i < n && pos_ < text_.size(); ++i) {
            if (text_[pos_] == '\n') ++line_;
            ++pos_;
        }
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
            advance();
    }

    void skip_misc() {
        for (;;) {
            skip_ws();
            if (starts_with("<?")) {
                while (pos_ < text_.size() && !starts_with("?>")) advance();
                if (!starts_with("?>")) fail("unterminated declaration");
                advance(2);
            } else if (starts_with("<!--")) {
                while (pos_ < text_.size() && !starts_with("-->")) advance();
                if (!starts_with("-->")) fail("unterminated comment");
                advance(3);
            } else {
                return;
            }
        }
    }

    std::string parse_name() {
        std::size_t start = pos_;
        while (pos_ < text_.size()) {
            char c = text_[pos_];
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == ':' || c == '-' ||
                c == '.')
                advance();
            else
                break;
        }
        if (pos_ == start) fail("expected a name");
        return std::string(text_.substr(start, pos_ - start));
    }

    std::string parse_attr_value() {
        char quote = peek();
        if (quote != '"' && quote != '\'') fail("expected quoted attribute value");
        advance();
        std::string out;
        while (pos_ < text_.size() && text_[pos_] != quote) {
            if (text_[pos_] == '&') {
                if (starts_with("&amp;")) out += '&', advance(5);
                else if (starts_with("&lt;")) out += '<', advance(4);
                else if (starts_with("&gt;")) out += '>', advance(4);
                else if (starts_with("&quot;")) out += '"', advance(6);
                else if (starts_with("&apos;")) out += '\'', advance(6);
                else fail("unknown entity reference");
            } else {
                out += text_[pos_];
                advance();
            }
        }
        if (pos_ == text_.size()) fail("unterminated attribute value");
        advance();
        return out;
    }

    XmlNode parse_element() {
        XmlNode node;
        node.line = line_;
        advance(); // '<'
        node.tag = parse_name();
        for (;;) {
            skip_ws();
            char c = peek();
            if (c == '/') {
                advance();
                if (peek() != '>') fail("malformed self-closing tag");
                advance();
                return node;
            }
            if (c == '>') {
                advance();
                break;
            }
            if (c == '\0') fail("unterminated start tag");
            std::string name = parse_name();
            skip_ws();
            if (peek() != '=') fail("expected '=' after attribute name");
            advance();
            skip_ws();
            node.attrs.emplace_back(std::move(name), parse_attr_value());
        }
        for (;;) {
            skip_misc();
            if (starts_with("</")) {
                advance(2);
                std::string closing = parse_name();
                if (closing != node.tag)
                    fail("mismatched closing tag '" + closing + "' for '" + node.tag + "'");
                skip_ws();
                if (peek() != '>') fail("malformed closing tag");
                advance();
                return node;
            }
            if (peek() == '<') {
                node.children.push_back(parse_element());
            } else if (peek() == '\0') {
                fail("unterminated element '" + node.tag + "'");
            } else {
                fail("text content is not allowed");
            }
        }
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    int line_ = 1;
};

// ---------------------------------------------------------------------------
// Dialect decoding

struct Reader {
    const Metamodel& mm;
    Model& model;
    std::vector<std::pair<std::string, std::pair<std::string, std::string>>> pending_refs;
    // (owner id, (ref name, raw idref text))

    std::string read_element(const XmlNode& node) {
        const ClassDef* cls = mm.find_class(node.tag);
        if (!cls)
            throw ParseError("class '" + node.tag + "' not in metamodel " + mm.name(), node.line,
                             0);
        const std::string* id = node.attr("xmi:id");
        if (!id) throw ParseError("element '" + node.tag + "' lacks xmi:id", node.line, 0);
        try {
            model.add_element(*id, node.tag);
        } catch (const EngineError& e) {
            throw ParseError(e.what(), node.line, 0);
        }
        for (const auto& [name, raw] : node.attrs) {
            if (name == "xmi:id") continue;
            if (const AttrDef* a = mm.find_attr(node.tag, name)) {
                model.set_attr(*id, name, decode_attr(*a, raw, node.line));
            } else if (const RefDef* r = mm.find_ref(node.tag, name)) {
                if (r->containment)
                    throw ParseError("containment reference '" + name +
                                         "' may not be an idref attribute",
                                     node.line, 0);
                pending_refs.push_back({*id, {name, raw}});
            } else {
                throw ParseError("property '" + name + "' not declared on class " + node.tag,
                                 node.line, 0);
            }
        }
        for (const XmlNode& group : node.children) {
            const RefDef* r = mm.find_ref(node.tag, group.tag);
            if (!r || !r->containment)
                throw ParseError("'" + group.tag + "' is not a containment reference of " +
                                     node.tag,
                                 group.line, 0);
            std::vector<std::string> children = model.require(*id).ref(group.tag);
            for (const XmlNode& child : group.children)
                children.push_back(read_element(child));
            model.set_ref(*id, group.tag, std::move(children));
        }
        return *id;
    }

    static Value decode_attr(const AttrDef& a, const std::string& raw, int line) {
        switch (a.type) {
        case PrimType::String: return Value(raw);
        case PrimType::Int: {
            try {
                std::size_t used = 0;
                long long v = std::stoll(raw, &used);
                if (used != raw.size()) throw std::invalid_argument(raw);
                return Value(static_cast<std::int64_t>(v));
            } catch (const std::exception&) {
                throw ParseError("bad integer '" + raw + "' for attribute " + a.name, line, 0);
            }
        }
        case PrimType::Bool:
            if (raw == "true") return Value(true);
            if (raw == "false") return Value(false);
            throw ParseError("bad boolean '" + raw + "' for attribute " + a.name, line, 0);
        }
        throw ParseError("unreachable", line, 0);
    }

    void resolve_refs() {
        for (const auto& [owner, entry] : pending_refs) {
            const auto& [ref_name, raw] = entry;
            std::vector<std::string> targets;
            std::istringstream in(raw);
            std::string id;
            while (in >> id) {
                if (!model.contains(id))
                    throw ParseError("idref '" + id + "' in reference '" + ref_name + "' of '" +
                                     owner + "' resolves to nothing");
                targets.push_back(id);
            }
            model.set_ref(owner, ref_name, std::move(targets));
        }
    }
};

void write_element(const Model& m, const Element& e, std::string& out, int depth) {
    const Metamodel& mm = m.metamodel();
    std::string indent(static_cast<std::size_t>(depth) * 2, ' ');
    out += indent + "<" + e.class_name + " xmi:id=\"" + escape_xml(e.id, true) + "\"";
    for (const auto& [name, v] : e.attrs)
        out += " " + name + "=\"" + escape_xml(attr_text(v), true) + "\"";

    std::vector<const RefDef*> idrefs;
    std::vector<const RefDef*> children;
    for (const RefDef* r : mm.all_refs(e.class_name)) {
        if (!e.has_ref(r->name)) continue;
        (r->containment ? children : idrefs).push_back(r);
    }
    std::sort(idrefs.begin(), idrefs.end(),
              [](const RefDef* a, const RefDef* b) { return a->name < b->name; });
    for (const RefDef* r : idrefs) {
        std::string joined;
        for (const std::string& t : e.ref(r->name)) {
            if (!joined.empty()) joined += ' ';
            joined += t;
        }
        out += " " + r->name + "=\"" + escape_xml(joined, true) + "\"";
    }

    if (children.empty()) {
        out += "/>\n";
        return;
    }
    out += ">\n";
    for (const RefDef* r : children) {
        out += indent + "  <" + r->name + ">\n";
        for (const std::string& child_id : e.ref(r->name))
            write_element(m, m.require(child_id), out, depth + 2);
        out += indent + "  </" + r->name + ">\n";
    }
    out += indent + "</" + e.class_name + ">\n";
}

} // namespace

Model read_model(std::string_view text, const Metamodel& mm) {
    XmlParser parser(text);
    XmlNode doc = parser.parse_document();
    Model m(mm);
    Reader reader{mm, m, {}};
    if (doc.tag == "model") {
        for (const XmlNode& child : doc.children) reader.read_element(child);
    } else {
        reader.read_element(doc);
    }
    reader.resolve_refs();
    return m;
}

std::string write_xmi(const Model& m) {
    std::string out;
    if (m.roots().size() == 1) {
        write_element(m, m.require(m.roots().front()), out, 0);
    } else {
        out += m.roots().empty() ? "<model/>\n" : "<model>\n";
        if (!m.roots().empty()) {
            for (const std::string& root : m.roots())
                write_element(m, m.require(root), out, 1);
            out += "</model>\n";
        }
    }
    return out;
}

std::string write_html(const Model& m) {
    if (m.roots().size() != 1)
        throw EngineError("html output requires a model with exactly one root");
    const Element& root = m.require(m.roots().front());
    if (root.class_name != "Html")
        throw EngineError("html output requires an Html root, got " + root.class_name);
    std::string title;
    if (auto it = root.attrs.find("title"); it != root.attrs.end()) title = it->second.as_string();
    std::string out = "<html><head><title>" + escape_xml(title, false) + "</title></head><body>";
    for (const std::string& pid : root.ref("body")) {
        const Element& p = m.require(pid);
        std::string text;
        if (auto it = p.attrs.find("text"); it != p.attrs.end()) text = it->second.as_string();
        out += "<p>" + escape_xml(text, false) + "</p>";
    }
    out += "</body></html>\n";
    return out;
}

std::string write_model(const Model& m, OutputFormat format) {
    return format == OutputFormat::Html ? write_html(m) : write_xmi(m);
}

} // namespace relq
