#pragma once

#include <string>
#include <string_view>

#include "relq/model.hpp"

namespace relq {

enum class OutputFormat { Xmi, Html };

// Reads a model from the XMI-flavored dialect:
//
//   - one XML element per model element, class name as tag, identity in the
//     mandatory xmi:id attribute;
//   - primitive attributes as XML attributes;
//   - non-containment references as space-separated idref attributes;
//   - containment as child elements grouped under a tag named after the
//     reference.
//
// A document whose root tag is `model` is a wrapper for zero or many model
// roots. Errors: malformed XML, missing xmi:id, duplicate ids, unknown
// classes or properties, idrefs that resolve to nothing.
Model read_model(std::string_view text, const Metamodel& mm);

// Canonical serialization: within an element, xmi:id first, then attributes
// alphabetically, then idref attributes alphabetically; children follow the
// containment structure. Two equal models serialize byte-identically.
std::string write_xmi(const Model& m);

// Fixed-template HTML rendering for HtmlMetaModel instances:
// <html><head><title>..</title></head><body><p>..</p>...</body></html>
// Throws EngineError when the model's single root is not an Html element.
std::string write_html(const Model& m);

std::string write_model(const Model& m, OutputFormat format);

} // namespace relq
