#include "relq/tdsl.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "relq/natives.hpp"

namespace relq {

std::string TypeRef::str() const {
    switch (kind) {
    case Kind::String: return "string";
    case Kind::Int: return "int";
    case Kind::Bool: return "bool";
    case Kind::Class: return class_name;
    }
    return "?";
}

const Relation* Transformation::find_relation(std::string_view name) const {
    for (const auto& r : relations)
        if (r.name == name) return &r;
    return nullptr;
}

const QueryDef* Transformation::find_query(std::string_view name) const {
    for (const auto& q : queries)
        if (q.name == name) return &q;
    return nullptr;
}

std::vector<std::string> Relation::call_signature() const {
    std::vector<std::string> out;
    if (source && !source->root.var_name.empty()) out.push_back(source->root.var_name);
    if (target && !target->root.var_name.empty() &&
        (out.empty() || out.front() != target->root.var_name))
        out.push_back(target->root.var_name);
    for (const auto& p : params) out.push_back(p.name);
    return out;
}

// ---------------------------------------------------------------------------
// Lexer

namespace {

enum class Tok {
    Ident,
    Int,
    String,
    LBrace,
    RBrace,
    LParen,
    RParen,
    Semi,
    Colon,
    Comma,
    Dot,
    Assign, // =
    Ne,     // <>
    Pipe,
    Plus,
    End,
};

struct Token {
    Tok kind = Tok::End;
    std::string text;
    std::int64_t int_value = 0;
    int line = 1;
    int col = 1;
};

class Lexer {
public:
    explicit Lexer(std::string_view text) : text_(text) { next(); }

    const Token& peek() const { return tok_; }

    Token take() {
        Token t = tok_;
        next();
        return t;
    }

private:
    void next() {
        skip_trivia();
        tok_ = Token{};
        tok_.line = line_;
        tok_.col = col_;
        if (pos_ >= text_.size()) {
            tok_.kind = Tok::End;
            return;
        }
        char c = text_[pos_];
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            lex_ident();
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '-' && pos_ + 1 < text_.size() &&
             std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])))) {
            lex_int();
            return;
        }
        if (c == '"') {
            lex_string();
            return;
        }
        advance();
        switch (c) {
        case '{': tok_.kind = Tok::LBrace; return;
        case '}': tok_.kind = Tok::RBrace; return;
        case '(': tok_.kind = Tok::LParen; return;
        case ')': tok_.kind = Tok::RParen; return;
        case ';': tok_.kind = Tok::Semi; return;
        case ':': tok_.kind = Tok::Colon; return;
        case ',': tok_.kind = Tok::Comma; return;
        case '.': tok_.kind = Tok::Dot; return;
        case '=': tok_.kind = Tok::Assign; return;
        case '|': tok_.kind = Tok::Pipe; return;
        case '+': tok_.kind = Tok::Plus; return;
        case '<':
            if (pos_ < text_.size() && text_[pos_] == '>') {
                advance();
                tok_.kind = Tok::Ne;
                return;
            }
            throw ParseError("stray '<'", tok_.line, tok_.col);
        default:
            throw ParseError(std::string("unexpected character '") + c + "'", tok_.line,
                             tok_.col);
        }
    }

    void advance() {
        if (pos_ < text_.size()) {
            if (text_[pos_] == '\n') {
                ++line_;
                col_ = 1;
            } else {
                ++col_;
            }
            ++pos_;
        }
    }

    void skip_trivia() {
        for (;;) {
            while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
                advance();
            if (pos_ + 1 < text_.size() && text_[pos_] == '/' && text_[pos_ + 1] == '/') {
                while (pos_ < text_.size() && text_[pos_] != '\n') advance();
                continue;
            }
            return;
        }
    }

    void lex_ident() {
        std::size_t start = pos_;
        while (pos_ < text_.size()) {
            char c = text_[pos_];
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') advance();
            else break;
        }
        tok_.kind = Tok::Ident;
        tok_.text = std::string(text_.substr(start, pos_ - start));
        // "xmi:id" is one property token.
        if (tok_.text == "xmi" && text_.substr(pos_, 3) == ":id") {
            advance();
            advance();
            advance();
            tok_.text = "xmi:id";
        }
    }

    void lex_int() {
        std::size_t start = pos_;
        if (text_[pos_] == '-') advance();
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
            advance();
        tok_.kind = Tok::Int;
        tok_.text = std::string(text_.substr(start, pos_ - start));
        tok_.int_value = std::stoll(tok_.text);
    }

    void lex_string() {
        advance(); // opening quote
        std::string out;
        for (;;) {
            if (pos_ >= text_.size()) throw ParseError("unterminated string", tok_.line, tok_.col);
            char c = text_[pos_];
            if (c == '"') {
                advance();
                break;
            }
            if (c == '\\') {
                advance();
                if (pos_ >= text_.size())
                    throw ParseError("unterminated string", tok_.line, tok_.col);
                char esc = text_[pos_];
                advance();
                switch (esc) {
                case 'n': out += '\n'; break;
                case 't': out += '\t'; break;
                case '"': out += '"'; break;
                case '\\': out += '\\'; break;
                default:
                    throw ParseError(std::string("unknown escape '\\") + esc + "'", line_, col_);
                }
                continue;
            }
            if (c == '\n') throw ParseError("newline in string", tok_.line, tok_.col);
            out += c;
            advance();
        }
        tok_.kind = Tok::String;
        tok_.text = std::move(out);
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
    Token tok_;
};

// ---------------------------------------------------------------------------
// Parser

class Parser {
public:
    explicit Parser(std::string_view text) : lex_(text) {}

    ExprPtr parse_single_expression() {
        ExprPtr e = parse_expr();
        expect(Tok::End);
        return e;
    }

    Transformation parse() {
        expect_kw("transformation");
        t_.name = expect_ident("transformation name");
        expect(Tok::LBrace);
        expect_kw("config");
        parse_config();
        while (!at(Tok::RBrace)) {
            if (at_kw("native")) {
                take();
                t_.natives.push_back(expect_ident("native function name"));
                expect(Tok::Semi);
            } else if (at_kw("query")) {
                parse_query();
            } else if (at_kw("relation") || at_kw("top")) {
                parse_relation();
            } else {
                fail("expected 'relation', 'query' or 'native'");
            }
        }
        expect(Tok::RBrace);
        expect(Tok::End);
        resolve();
        return std::move(t_);
    }

private:
    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError(msg, lex_.peek().line, lex_.peek().col);
    }

    bool at(Tok k) const { return lex_.peek().kind == k; }
    bool at_kw(std::string_view kw) const {
        return lex_.peek().kind == Tok::Ident && lex_.peek().text == kw;
    }
    Token take() { return lex_.take(); }

    Token expect(Tok k) {
        if (!at(k)) fail("unexpected token '" + lex_.peek().text + "'");
        return take();
    }

    void expect_kw(std::string_view kw) {
        if (!at_kw(kw)) fail("expected '" + std::string(kw) + "'");
        take();
    }

    std::string expect_ident(const std::string& what) {
        if (!at(Tok::Ident)) fail("expected " + what);
        return take().text;
    }

    void parse_config() {
        expect(Tok::LBrace);
        bool have_source = false, have_target = false;
        while (!at(Tok::RBrace)) {
            if (at_kw("source") || at_kw("target")) {
                bool is_source = take().text == "source";
                std::string mm = expect_ident("metamodel name");
                expect_kw("key");
                std::string key = expect_ident("key property");
                expect_kw("as");
                std::string alias = expect_ident("model alias");
                if (is_source) {
                    t_.config.source_mm = mm;
                    t_.config.source_key = key;
                    t_.config.source_alias = alias;
                    have_source = true;
                } else {
                    t_.config.target_mm = mm;
                    t_.config.target_key = key;
                    t_.config.target_alias = alias;
                    have_target = true;
                }
                expect(Tok::Semi);
            } else if (at_kw("inplace")) {
                take();
                t_.config.in_place = true;
                expect(Tok::Semi);
            } else if (at_kw("output")) {
                take();
                std::string mode = expect_ident("output mode");
                if (mode == "xmi") t_.config.output = OutputFormat::Xmi;
                else if (mode == "html") t_.config.output = OutputFormat::Html;
                else fail("output mode must be xmi or html");
                expect(Tok::Semi);
            } else if (at_kw("param")) {
                Token kw = take();
                ConfigParam p;
                p.name = expect_ident("parameter name");
                expect(Tok::Colon);
                p.type = parse_type_ref();
                if (p.type.kind == TypeRef::Kind::Class)
                    throw ParseError("config parameters must have primitive types", kw.line,
                                     kw.col);
                if (at(Tok::Assign)) {
                    take();
                    p.default_value = parse_literal_value();
                }
                t_.config.params.push_back(std::move(p));
                expect(Tok::Semi);
            } else {
                fail("unexpected config entry");
            }
        }
        expect(Tok::RBrace);
        if (!have_source || !have_target) fail("config needs both source and target");
        if (t_.config.in_place && t_.config.source_mm != t_.config.target_mm)
            fail("in-place transformations require equal source and target metamodels");
    }

    TypeRef parse_type_ref() {
        Token t = take();
        if (t.kind != Tok::Ident) throw ParseError("expected a type", t.line, t.col);
        TypeRef out;
        if (t.text == "string") out.kind = TypeRef::Kind::String;
        else if (t.text == "int") out.kind = TypeRef::Kind::Int;
        else if (t.text == "bool") out.kind = TypeRef::Kind::Bool;
        else {
            out.kind = TypeRef::Kind::Class;
            out.class_name = t.text;
        }
        return out;
    }

    Value parse_literal_value() {
        Token t = take();
        switch (t.kind) {
        case Tok::String: return Value(t.text);
        case Tok::Int: return Value(t.int_value);
        case Tok::Ident:
            if (t.text == "true") return Value(true);
            if (t.text == "false") return Value(false);
            [[fallthrough]];
        default: throw ParseError("expected a literal", t.line, t.col);
        }
    }

    std::vector<ParamDecl> parse_param_list() {
        std::vector<ParamDecl> out;
        if (!at(Tok::LParen)) return out;
        take();
        while (!at(Tok::RParen)) {
            if (!out.empty()) expect(Tok::Comma);
            ParamDecl p;
            p.name = expect_ident("parameter name");
            expect(Tok::Colon);
            p.type = parse_type_ref();
            out.push_back(std::move(p));
        }
        expect(Tok::RParen);
        return out;
    }

    void parse_query() {
        expect_kw("query");
        QueryDef q;
        q.name = expect_ident("query name");
        q.params = parse_param_list();
        expect(Tok::Assign);
        q.body = parse_expr();
        expect(Tok::Semi);
        t_.queries.push_back(std::move(q));
    }

    void parse_relation() {
        Relation r;
        if (at_kw("top")) {
            take();
            r.is_top = true;
        }
        expect_kw("relation");
        r.name = expect_ident("relation name");
        r.params = parse_param_list();
        expect(Tok::LBrace);
        while (at_kw("domain")) {
            Token kw = take();
            DomainPattern p;
            p.model_alias = expect_ident("model alias");
            p.root = parse_template();
            if (at_kw("diff")) {
                take();
                std::string op = expect_ident("diff kind");
                if (op == "insert") p.diff_op = DiffKind::Insert;
                else if (op == "remove") p.diff_op = DiffKind::Remove;
                else if (op == "replace") p.diff_op = DiffKind::Replace;
                else fail("diff kind must be insert, remove or replace");
                if (!t_.config.in_place)
                    throw ParseError("diff markers need an in-place transformation", kw.line,
                                     kw.col);
            }
            expect(Tok::Semi);
            if (p.model_alias == t_.config.source_alias) {
                if (r.source) throw ParseError("duplicate source domain", kw.line, kw.col);
                r.source = std::move(p);
            } else if (p.model_alias == t_.config.target_alias) {
                if (r.target) throw ParseError("duplicate target domain", kw.line, kw.col);
                r.target = std::move(p);
            } else {
                throw ParseError("unknown model alias '" + p.model_alias + "'", kw.line, kw.col);
            }
        }
        if (!r.source && !r.target) fail("relation needs at least one domain");
        if (at_kw("when")) {
            take();
            expect(Tok::LBrace);
            while (!at(Tok::RBrace)) {
                r.when.push_back(parse_expr());
                expect(Tok::Semi);
            }
            expect(Tok::RBrace);
        }
        if (at_kw("where")) {
            take();
            expect(Tok::LBrace);
            while (!at(Tok::RBrace)) {
                WhereStmt s;
                s.line = lex_.peek().line;
                s.col = lex_.peek().col;
                if (at_kw("call")) {
                    take();
                    s.kind = WhereStmt::Kind::Call;
                    s.name = expect_ident("relation name");
                    expect(Tok::LParen);
                    while (!at(Tok::RParen)) {
                        if (!s.args.empty()) expect(Tok::Comma);
                        s.args.push_back(parse_expr());
                    }
                    expect(Tok::RParen);
                } else {
                    s.kind = WhereStmt::Kind::VarDef;
                    s.name = expect_ident("variable name");
                    expect(Tok::Assign);
                    s.expr = parse_expr();
                }
                expect(Tok::Semi);
                r.where.push_back(std::move(s));
            }
            expect(Tok::RBrace);
        }
        expect(Tok::RBrace);
        t_.relations.push_back(std::move(r));
    }

    // <var>:<Class> { slots }  |  <Class> { slots }
    ObjectTemplate parse_template() {
        ObjectTemplate t;
        t.line = lex_.peek().line;
        t.col = lex_.peek().col;
        std::string first = expect_ident("object template");
        if (at(Tok::Colon)) {
            take();
            t.var_name = first;
            t.class_name = expect_ident("class name");
        } else {
            t.class_name = first;
        }
        expect(Tok::LBrace);
        while (!at(Tok::RBrace)) {
            std::string prop = expect_ident("property name");
            expect(Tok::Assign);
            t.slots.emplace_back(std::move(prop), parse_slot());
            expect(Tok::Semi);
        }
        expect(Tok::RBrace);
        return t;
    }

    SlotExpr parse_slot() {
        SlotExpr s;
        const Token& tok = lex_.peek();
        if (tok.kind == Tok::String || tok.kind == Tok::Int ||
            (tok.kind == Tok::Ident && (tok.text == "true" || tok.text == "false"))) {
            s.kind = SlotExpr::Kind::Literal;
            s.literal = parse_literal_value();
            return s;
        }
        if (tok.kind != Tok::Ident) fail("expected a slot value");
        // Lookahead decides: `v:Class {`, `Class {` or a plain variable.
        Token first = take();
        if (at(Tok::Colon) || at(Tok::LBrace)) {
            ObjectTemplate t;
            t.line = first.line;
            t.col = first.col;
            if (at(Tok::Colon)) {
                take();
                t.var_name = first.text;
                t.class_name = expect_ident("class name");
            } else {
                t.class_name = first.text;
            }
            expect(Tok::LBrace);
            while (!at(Tok::RBrace)) {
                std::string prop = expect_ident("property name");
                expect(Tok::Assign);
                t.slots.emplace_back(std::move(prop), parse_slot());
                expect(Tok::Semi);
            }
            expect(Tok::RBrace);
            s.kind = SlotExpr::Kind::Template;
            s.tmpl = std::make_shared<ObjectTemplate>(std::move(t));
            return s;
        }
        s.kind = SlotExpr::Kind::Variable;
        s.var = first.text;
        return s;
    }

    // Expression grammar, loosest to tightest: or, and, = <>, +, not, postfix.
    ExprPtr parse_expr() { return parse_or(); }

    ExprPtr parse_or() {
        ExprPtr lhs = parse_and();
        while (at_kw("or")) {
            Token op = take();
            lhs = make_expr(Expr::Kind::Or, {lhs, parse_and()}, {}, op.line, op.col);
        }
        return lhs;
    }

    ExprPtr parse_and() {
        ExprPtr lhs = parse_cmp();
        while (at_kw("and")) {
            Token op = take();
            lhs = make_expr(Expr::Kind::And, {lhs, parse_cmp()}, {}, op.line, op.col);
        }
        return lhs;
    }

    ExprPtr parse_cmp() {
        ExprPtr lhs = parse_add();
        if (at(Tok::Assign) || at(Tok::Ne)) {
            Token op = take();
            ExprPtr rhs = parse_add();
            lhs = make_expr(op.kind == Tok::Assign ? Expr::Kind::Eq : Expr::Kind::Ne, {lhs, rhs},
                            {}, op.line, op.col);
        }
        return lhs;
    }

    ExprPtr parse_add() {
        ExprPtr lhs = parse_unary();
        while (at(Tok::Plus)) {
            Token op = take();
            lhs = make_expr(Expr::Kind::Add, {lhs, parse_unary()}, {}, op.line, op.col);
        }
        return lhs;
    }

    ExprPtr parse_unary() {
        if (at_kw("not")) {
            Token op = take();
            return make_expr(Expr::Kind::Not, {parse_unary()}, {}, op.line, op.col);
        }
        return parse_postfix();
    }

    ExprPtr parse_postfix() {
        ExprPtr e = parse_primary();
        while (at(Tok::Dot)) {
            take();
            Token name = expect(Tok::Ident);
            if (!at(Tok::LParen)) {
                e = make_expr(Expr::Kind::Nav, {e}, name.text, name.line, name.col);
                continue;
            }
            take(); // '('
            if (name.text == "select" || name.text == "exists") {
                std::string iter = expect_ident("iterator variable");
                expect(Tok::Pipe);
                ExprPtr pred = parse_expr();
                expect(Tok::RParen);
                e = make_expr(name.text == "select" ? Expr::Kind::Select : Expr::Kind::Exists,
                              {e, pred}, iter, name.line, name.col);
            } else if (name.text == "excluding") {
                ExprPtr arg = parse_expr();
                expect(Tok::RParen);
                e = make_expr(Expr::Kind::Excluding, {e, arg}, {}, name.line, name.col);
            } else {
                expect(Tok::RParen);
                Expr::Kind kind;
                if (name.text == "size") kind = Expr::Kind::Size;
                else if (name.text == "isEmpty") kind = Expr::Kind::IsEmpty;
                else if (name.text == "notEmpty") kind = Expr::Kind::NotEmpty;
                else if (name.text == "first") kind = Expr::Kind::First;
                else if (name.text == "distinct") kind = Expr::Kind::Distinct;
                else
                    throw ParseError("unknown collection operation '" + name.text + "'",
                                     name.line, name.col);
                e = make_expr(kind, {e}, {}, name.line, name.col);
            }
        }
        return e;
    }

    ExprPtr parse_primary() {
        const Token& tok = lex_.peek();
        switch (tok.kind) {
        case Tok::String:
        case Tok::Int: {
            Token t = take();
            return make_literal(t.kind == Tok::String ? Value(t.text) : Value(t.int_value),
                                t.line, t.col);
        }
        case Tok::LParen: {
            take();
            ExprPtr e = parse_expr();
            expect(Tok::RParen);
            return e;
        }
        case Tok::Ident: {
            Token t = take();
            if (t.text == "true") return make_literal(Value(true), t.line, t.col);
            if (t.text == "false") return make_literal(Value(false), t.line, t.col);
            if (at(Tok::LParen)) {
                take();
                std::vector<ExprPtr> args;
                while (!at(Tok::RParen)) {
                    if (!args.empty()) expect(Tok::Comma);
                    args.push_back(parse_expr());
                }
                expect(Tok::RParen);
                return make_expr(Expr::Kind::Call, std::move(args), t.text, t.line, t.col);
            }
            return make_expr(Expr::Kind::Var, {}, t.text, t.line, t.col);
        }
        default: fail("expected an expression");
        }
    }

    // -----------------------------------------------------------------------
    // Resolution: names, variable scoping, grammar-level invariants.

    static void free_vars(const Expr& e, std::set<std::string>& out) {
        if (e.kind == Expr::Kind::Var) {
            out.insert(e.name);
            return;
        }
        if (e.kind == Expr::Kind::Select || e.kind == Expr::Kind::Exists) {
            std::set<std::string> inner;
            free_vars(*e.args[0], out);
            free_vars(*e.args[1], inner);
            inner.erase(e.name);
            out.insert(inner.begin(), inner.end());
            return;
        }
        for (const auto& a : e.args) free_vars(*a, out);
    }

    void collect_calls(const Expr& e, std::vector<const Expr*>& out) const {
        if (e.kind == Expr::Kind::Call) out.push_back(&e);
        for (const auto& a : e.args) collect_calls(*a, out);
    }

    void check_expr_names(const Expr& e, const std::set<std::string>& scope,
                          const std::string& ctx) const {
        std::set<std::string> vars;
        free_vars(e, vars);
        for (const auto& v : vars)
            if (!scope.count(v))
                throw ParseError("variable '" + v + "' used before bound in " + ctx, e.line,
                                 e.col);
        std::vector<const Expr*> calls;
        collect_calls(e, calls);
        for (const Expr* c : calls) {
            bool known = t_.find_query(c->name) != nullptr ||
                         std::find(t_.natives.begin(), t_.natives.end(), c->name) !=
                             t_.natives.end();
            if (!known)
                throw ParseError("unknown query or native function '" + c->name + "' in " + ctx,
                                 c->line, c->col);
        }
    }

    void collect_template_vars(const ObjectTemplate& t, std::set<std::string>& bound,
                               bool allow_rebind, const std::set<std::string>& reserved) const {
        if (!t.var_name.empty()) {
            if (reserved.count(t.var_name) && !allow_rebind)
                throw ParseError("variable '" + t.var_name + "' shadows an existing binding",
                                 t.line, t.col);
            bound.insert(t.var_name);
        }
        for (const auto& [prop, slot] : t.slots) {
            if (slot.kind == SlotExpr::Kind::Template)
                collect_template_vars(*slot.tmpl, bound, allow_rebind, reserved);
            else if (slot.kind == SlotExpr::Kind::Variable)
                bound.insert(slot.var); // first occurrence binds, later ones constrain
        }
    }

    void collect_target_slot_vars(const ObjectTemplate& t, std::set<std::string>& slot_vars,
                                  std::set<std::string>& template_vars) const {
        if (!t.var_name.empty()) template_vars.insert(t.var_name);
        for (const auto& [prop, slot] : t.slots) {
            if (slot.kind == SlotExpr::Kind::Template)
                collect_target_slot_vars(*slot.tmpl, slot_vars, template_vars);
            else if (slot.kind == SlotExpr::Kind::Variable)
                slot_vars.insert(slot.var);
        }
    }

    void resolve() {
        std::set<std::string> names;
        for (const auto& r : t_.relations)
            if (!names.insert(r.name).second)
                throw ParseError("duplicate relation name '" + r.name + "'");
        for (const auto& q : t_.queries)
            if (!names.insert(q.name).second)
                throw ParseError("duplicate query name '" + q.name + "'");
        for (const auto& n : t_.natives)
            if (!names.insert(n).second) throw ParseError("duplicate native name '" + n + "'");

        if (std::none_of(t_.relations.begin(), t_.relations.end(),
                         [](const Relation& r) { return r.is_top; }))
            throw ParseError("transformation has no top-level relation");

        std::set<std::string> globals;
        for (const auto& p : t_.config.params) globals.insert(p.name);

        for (const auto& q : t_.queries) {
            std::set<std::string> scope = {t_.config.source_alias, t_.config.target_alias};
            for (const auto& p : q.params) scope.insert(p.name);
            check_expr_names(*q.body, scope, "query " + q.name);
        }

        for (const auto& r : t_.relations) {
            std::set<std::string> scope = globals;
            for (const auto& p : r.params) {
                if (!scope.insert(p.name).second)
                    throw ParseError("duplicate parameter '" + p.name + "' in relation " +
                                     r.name);
            }
            std::set<std::string> source_vars;
            if (r.source) collect_template_vars(r.source->root, source_vars, false, scope);
            scope.insert(source_vars.begin(), source_vars.end());

            for (const auto& w : r.when) check_expr_names(*w, scope, "when of " + r.name);

            // Where: definitions extend the scope left to right; call
            // arguments may additionally use target-pattern variables since
            // calls run after target enforcement.
            std::set<std::string> target_template_vars, target_slot_vars;
            if (r.target)
                collect_target_slot_vars(r.target->root, target_slot_vars, target_template_vars);

            std::set<std::string> where_scope = scope;
            for (const auto& w : r.where) {
                if (w.kind == WhereStmt::Kind::VarDef) {
                    check_expr_names(*w.expr, where_scope, "where of " + r.name);
                    if (where_scope.count(w.name) || target_template_vars.count(w.name))
                        throw ParseError("variable '" + w.name + "' shadows an existing binding",
                                         w.line, w.col);
                    where_scope.insert(w.name);
                } else {
                    const Relation* callee = nullptr;
                    for (const auto& cand : t_.relations)
                        if (cand.name == w.name) callee = &cand;
                    if (!callee)
                        throw ParseError("unknown relation '" + w.name + "' in where of " +
                                             r.name,
                                         w.line, w.col);
                    std::size_t arity = callee->call_signature().size();
                    if (w.args.size() != arity)
                        throw ParseError("relation " + w.name + " expects " +
                                             std::to_string(arity) + " arguments, got " +
                                             std::to_string(w.args.size()),
                                         w.line, w.col);
                    std::set<std::string> call_scope = where_scope;
                    call_scope.insert(target_template_vars.begin(), target_template_vars.end());
                    for (const auto& a : w.args)
                        check_expr_names(*a, call_scope, "call of " + w.name);
                }
            }

            // Target slot variables must be bound by the time the pattern is
            // enforced: source bindings, where definitions, parameters.
            for (const auto& v : target_slot_vars) {
                if (!where_scope.count(v) && !target_template_vars.count(v))
                    throw ParseError("variable '" + v + "' used before bound in target of " +
                                     r.name);
            }
        }
    }

    Lexer lex_;
    Transformation t_;
};

// ---------------------------------------------------------------------------
// Structural dump (parse determinism checks, debugging)

std::string dump_expr(const Expr& e) {
    switch (e.kind) {
    case Expr::Kind::Literal: return e.literal.display();
    case Expr::Kind::Var: return e.name;
    case Expr::Kind::Nav: return dump_expr(*e.args[0]) + "." + e.name;
    case Expr::Kind::Select:
    case Expr::Kind::Exists:
        return dump_expr(*e.args[0]) + (e.kind == Expr::Kind::Select ? ".select(" : ".exists(") +
               e.name + " | " + dump_expr(*e.args[1]) + ")";
    case Expr::Kind::Size: return dump_expr(*e.args[0]) + ".size()";
    case Expr::Kind::IsEmpty: return dump_expr(*e.args[0]) + ".isEmpty()";
    case Expr::Kind::NotEmpty: return dump_expr(*e.args[0]) + ".notEmpty()";
    case Expr::Kind::First: return dump_expr(*e.args[0]) + ".first()";
    case Expr::Kind::Distinct: return dump_expr(*e.args[0]) + ".distinct()";
    case Expr::Kind::Excluding:
        return dump_expr(*e.args[0]) + ".excluding(" + dump_expr(*e.args[1]) + ")";
    case Expr::Kind::Eq: return "(" + dump_expr(*e.args[0]) + " = " + dump_expr(*e.args[1]) + ")";
    case Expr::Kind::Ne:
        return "(" + dump_expr(*e.args[0]) + " <> " + dump_expr(*e.args[1]) + ")";
    case Expr::Kind::And:
        return "(" + dump_expr(*e.args[0]) + " and " + dump_expr(*e.args[1]) + ")";
    case Expr::Kind::Or:
        return "(" + dump_expr(*e.args[0]) + " or " + dump_expr(*e.args[1]) + ")";
    case Expr::Kind::Not: return "(not " + dump_expr(*e.args[0]) + ")";
    case Expr::Kind::Add:
        return "(" + dump_expr(*e.args[0]) + " + " + dump_expr(*e.args[1]) + ")";
    case Expr::Kind::Call: {
        std::string out = e.name + "(";
        for (std::size_t i = 0; i < e.args.size(); ++i) {
            if (i) out += ", ";
            out += dump_expr(*e.args[i]);
        }
        return out + ")";
    }
    }
    return "?";
}

void dump_template(const ObjectTemplate& t, std::ostringstream& out) {
    if (!t.var_name.empty()) out << t.var_name << ":";
    out << t.class_name << "{";
    for (const auto& [prop, slot] : t.slots) {
        out << prop << "=";
        switch (slot.kind) {
        case SlotExpr::Kind::Literal: out << slot.literal.display(); break;
        case SlotExpr::Kind::Variable: out << slot.var; break;
        case SlotExpr::Kind::Template: dump_template(*slot.tmpl, out); break;
        }
        out << ";";
    }
    out << "}";
}

} // namespace

Transformation parse_transformation(std::string_view text) {
    return Parser(text).parse();
}

ExprPtr parse_expression(std::string_view text) {
    return Parser(text).parse_single_expression();
}

std::string Transformation::dump() const {
    std::ostringstream out;
    out << "transformation " << name << " source=" << config.source_mm << "/" << config.source_key
        << "/" << config.source_alias << " target=" << config.target_mm << "/"
        << config.target_key << "/" << config.target_alias
        << " inplace=" << (config.in_place ? 1 : 0)
        << " output=" << (config.output == OutputFormat::Html ? "html" : "xmi") << "\n";
    for (const auto& p : config.params) {
        out << "param " << p.name << ":" << p.type.str();
        if (p.default_value) out << "=" << p.default_value->display();
        out << "\n";
    }
    for (const auto& n : natives) out << "native " << n << "\n";
    for (const auto& q : queries) {
        out << "query " << q.name << "(";
        for (std::size_t i = 0; i < q.params.size(); ++i) {
            if (i) out << ", ";
            out << q.params[i].name << ":" << q.params[i].type.str();
        }
        out << ") = " << dump_expr(*q.body) << "\n";
    }
    for (const auto& r : relations) {
        out << (r.is_top ? "top relation " : "relation ") << r.name << "(";
        for (std::size_t i = 0; i < r.params.size(); ++i) {
            if (i) out << ", ";
            out << r.params[i].name << ":" << r.params[i].type.str();
        }
        out << ")\n";
        auto dump_domain = [&](const char* side, const std::optional<DomainPattern>& d) {
            if (!d) return;
            out << "  " << side << " " << d->model_alias << " ";
            dump_template(d->root, out);
            if (d->diff_op) {
                out << " diff ";
                switch (*d->diff_op) {
                case DiffKind::Insert: out << "insert"; break;
                case DiffKind::Remove: out << "remove"; break;
                case DiffKind::Replace: out << "replace"; break;
                }
            }
            out << "\n";
        };
        dump_domain("source", r.source);
        dump_domain("target", r.target);
        for (const auto& w : r.when) out << "  when " << dump_expr(*w) << "\n";
        for (const auto& w : r.where) {
            if (w.kind == WhereStmt::Kind::VarDef) {
                out << "  where " << w.name << " = " << dump_expr(*w.expr) << "\n";
            } else {
                out << "  where call " << w.name << "(";
                for (std::size_t i = 0; i < w.args.size(); ++i) {
                    if (i) out << ", ";
                    out << dump_expr(*w.args[i]);
                }
                out << ")\n";
            }
        }
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Static checking against metamodels

namespace {

struct TfChecker {
    const Transformation& t;
    const Metamodel& src;
    const Metamodel& trg;
    const NativeRegistry* natives;
    std::vector<Diagnostic> out;

    void diag(const std::string& where, std::string msg) {
        out.push_back({where, std::move(msg)});
    }

    Type type_of(const TypeRef& p, const Metamodel& mm, const std::string& where) {
        switch (p.kind) {
        case TypeRef::Kind::String: return Type::string();
        case TypeRef::Kind::Int: return Type::integer();
        case TypeRef::Kind::Bool: return Type::boolean();
        case TypeRef::Kind::Class:
            if (!mm.find_class(p.class_name)) {
                diag(where, "unknown class '" + p.class_name + "'");
                return Type::invalid();
            }
            return Type::of_class(p.class_name);
        }
        return Type::invalid();
    }

    // Walks a template, emitting structural diagnostics and collecting the
    // types of variables it binds.
    void check_template(const ObjectTemplate& tp, const Metamodel& mm, const std::string& where,
                        std::map<std::string, Type>& vars) {
        const ClassDef* cls = mm.find_class(tp.class_name);
        if (!cls) {
            diag(where, "class '" + tp.class_name + "' not in metamodel " + mm.name());
            return;
        }
        if (!tp.var_name.empty() && !vars.count(tp.var_name))
            vars[tp.var_name] = Type::of_class(tp.class_name);
        for (const auto& [prop, slot] : tp.slots) {
            if (const AttrDef* a = mm.find_attr(tp.class_name, prop)) {
                Type expected = a->type == PrimType::String ? Type::string()
                                : a->type == PrimType::Int  ? Type::integer()
                                                            : Type::boolean();
                if (slot.kind == SlotExpr::Kind::Template) {
                    diag(where, "attribute '" + prop + "' cannot hold an object template");
                } else if (slot.kind == SlotExpr::Kind::Literal) {
                    Type got = slot.literal.is_string() ? Type::string()
                               : slot.literal.is_int()  ? Type::integer()
                                                        : Type::boolean();
                    if (got.kind != expected.kind)
                        diag(where, "literal " + slot.literal.display() + " in " +
                                        expected.str() + " attribute slot '" + prop + "'");
                } else if (auto it = vars.find(slot.var); it == vars.end()) {
                    vars[slot.var] = expected;
                } else if (!it->second.is_invalid() &&
                           it->second.kind != Type::Kind::Collection &&
                           it->second.kind != expected.kind) {
                    diag(where, "variable '" + slot.var + "' of type " + it->second.str() +
                                    " in " + expected.str() + " attribute slot '" + prop + "'");
                }
            } else if (const RefDef* r = mm.find_ref(tp.class_name, prop)) {
                if (slot.kind == SlotExpr::Kind::Literal) {
                    diag(where, "reference slot '" + prop + "' cannot hold a literal");
                } else if (slot.kind == SlotExpr::Kind::Template) {
                    if (r->many && !r->containment)
                        diag(where, "nested template under multi-valued non-containment "
                                    "reference '" +
                                        prop + "'");
                    if (mm.find_class(slot.tmpl->class_name) &&
                        !mm.is_subclass_of(slot.tmpl->class_name, r->target_class))
                        diag(where, "template class " + slot.tmpl->class_name +
                                        " does not conform to reference target " +
                                        r->target_class);
                    check_template(*slot.tmpl, mm, where, vars);
                } else if (!vars.count(slot.var)) {
                    vars[slot.var] = Type::collection(Type::of_class(r->target_class));
                }
            } else {
                diag(where, "property '" + prop + "' not declared on class " + tp.class_name);
            }
        }
    }

    void check_expr(const Expr& e, const std::map<std::string, Type>& vars,
                    const std::string& where, const Type* expect = nullptr) {
        std::vector<Diagnostic> local;
        Type got = typecheck(e, src, vars, &t, natives, local);
        for (auto& d : local) out.push_back({where + (d.where.empty() ? "" : " " + d.where),
                                             std::move(d.message)});
        if (expect && !got.is_invalid() && got.kind != expect->kind)
            diag(where, "expected " + expect->str() + ", got " + got.str());
    }

    void run() {
        if (t.config.source_mm != src.name())
            diag("config", "source metamodel is " + src.name() + ", expected " +
                               t.config.source_mm);
        if (t.config.target_mm != trg.name())
            diag("config", "target metamodel is " + trg.name() + ", expected " +
                               t.config.target_mm);

        if (natives) {
            for (const auto& n : t.natives)
                if (!natives->find(n)) diag("native " + n, "not in the native registry");
        }

        for (const auto& q : t.queries) {
            std::map<std::string, Type> vars;
            for (const auto& p : q.params)
                vars[p.name] = type_of(p.type, src, "query " + q.name);
            vars.emplace(t.config.source_alias, Type::collection(Type::invalid()));
            vars.emplace(t.config.target_alias, Type::collection(Type::invalid()));
            check_expr(*q.body, vars, "query " + q.name);
        }

        for (const auto& r : t.relations) check_relation(r);
    }

    void check_relation(const Relation& r) {
        const std::string where = "relation " + r.name;
        std::map<std::string, Type> vars;
        for (const auto& p : t.config.params)
            vars[p.name] = type_of(p.type, src, where);
        for (const auto& p : r.params) vars[p.name] = type_of(p.type, src, where);

        if (r.source) check_template(r.source->root, src, where + " (source)", vars);

        Type boolean = Type::boolean();
        for (const auto& w : r.when) check_expr(*w, vars, where + " when", &boolean);

        std::map<std::string, Type> target_vars = vars;
        if (r.target) check_template(r.target->root, trg, where + " (target)", target_vars);

        std::map<std::string, Type> scope = vars;
        for (const auto& w : r.where) {
            if (w.kind == WhereStmt::Kind::VarDef) {
                std::vector<Diagnostic> local;
                Type ty = typecheck(*w.expr, src, scope, &t, natives, local);
                for (auto& d : local)
                    out.push_back({where + " where", std::move(d.message)});
                scope[w.name] = ty;
            } else {
                check_call(r, w, scope, target_vars);
            }
        }
    }

    void check_call(const Relation& caller, const WhereStmt& w,
                    const std::map<std::string, Type>& scope,
                    const std::map<std::string, Type>& target_vars) {
        const Relation* callee = t.find_relation(w.name);
        if (!callee) return; // parse already rejects
        const std::string where = "relation " + caller.name + " call " + w.name;

        std::map<std::string, Type> call_scope = scope;
        for (const auto& [k, v] : target_vars) call_scope.emplace(k, v);

        // Expected kinds: the callee's seeded roots, then its parameters.
        std::vector<std::pair<Type, const Metamodel*>> expected;
        if (callee->source && !callee->source->root.var_name.empty())
            expected.push_back({Type::of_class(callee->source->root.class_name), &src});
        if (callee->target && !callee->target->root.var_name.empty() &&
            (!callee->source || callee->source->root.var_name != callee->target->root.var_name))
            expected.push_back({Type::of_class(callee->target->root.class_name), &trg});
        for (const auto& p : callee->params)
            expected.push_back({type_of(p.type, src, where), &src});

        for (std::size_t i = 0; i < w.args.size() && i < expected.size(); ++i) {
            std::vector<Diagnostic> local;
            Type got = typecheck(*w.args[i], src, call_scope, &t, natives, local);
            for (auto& d : local) out.push_back({where, std::move(d.message)});
            if (got.is_invalid() || expected[i].first.is_invalid()) continue;
            const Type& want = expected[i].first;
            const Type* g = &got;
            if (g->kind == Type::Kind::Collection) g = g->elem.get();
            if (g->is_invalid()) continue;
            bool ok;
            if (want.kind == Type::Kind::Class)
                ok = g->kind == Type::Kind::Class &&
                     expected[i].second->is_subclass_of(g->class_name, want.class_name);
            else
                ok = g->kind == want.kind;
            if (!ok)
                diag(where, "argument " + std::to_string(i + 1) + " expects " + want.str() +
                                ", got " + got.str());
        }
    }
};

} // namespace

std::vector<Diagnostic> check_transformation(const Transformation& t, const Metamodel& source_mm,
                                             const Metamodel& target_mm,
                                             const NativeRegistry* natives) {
    if (!natives) natives = &NativeRegistry::standard();
    TfChecker checker{t, source_mm, target_mm, natives, {}};
    checker.run();
    return std::move(checker.out);
}

} // namespace relq
