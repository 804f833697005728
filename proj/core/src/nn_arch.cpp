#include "lob/nn/arch.hpp"

#include <json.hpp>

#include "lob/nn/layers.hpp"

namespace lob::nn {

using nlohmann::json;

void ArchitectureSpec::validate() const {
    if (time < 1 || width < 1) throw ShapeMismatch("input dimensions must be positive");
    if (layers.empty()) throw ShapeMismatch("architecture has no layers");
    int lstms = 0;
    for (const auto& l : layers)
        if (std::holds_alternative<LstmSpec>(l)) ++lstms;
    if (lstms != 1) throw ShapeMismatch("architecture needs exactly one LSTM stage");
    const auto* dense = std::get_if<DenseSpec>(&layers.back());
    if (!dense || dense->units != 3)
        throw ShapeMismatch("final layer must be a 3-unit softmax head");
}

namespace {

json layer_to_json(const LayerSpec& l) {
    json j;
    if (const auto* c = std::get_if<Conv2DSpec>(&l)) {
        j = {{"type", "conv2d"},   {"filters", c->filters}, {"kh", c->kh}, {"kw", c->kw},
             {"zero_pad", c->zero_pad}, {"sh", c->sh},      {"sw", c->sw}};
    } else if (const auto* i = std::get_if<InceptionSpec>(&l)) {
        j = {{"type", "inception"}, {"filters", i->filters}};
    } else if (const auto* p = std::get_if<MaxPoolSpec>(&l)) {
        j = {{"type", "maxpool"}, {"kh", p->kh},         {"kw", p->kw},
             {"zero_pad", p->zero_pad}, {"sh", p->sh},   {"sw", p->sw}};
    } else if (const auto* d = std::get_if<DropoutSpec>(&l)) {
        j = {{"type", "dropout"}, {"rate", d->rate}};
    } else if (const auto* ls = std::get_if<LstmSpec>(&l)) {
        j = {{"type", "lstm"}, {"units", ls->units}};
    } else if (const auto* de = std::get_if<DenseSpec>(&l)) {
        j = {{"type", "dense"}, {"units", de->units}};
    }
    return j;
}

LayerSpec layer_from_json(const json& j) {
    const std::string type = j.at("type").get<std::string>();
    if (type == "conv2d")
        return Conv2DSpec{j.at("filters").get<int>(), j.at("kh").get<int>(),
                          j.at("kw").get<int>(),      j.at("zero_pad").get<bool>(),
                          j.at("sh").get<int>(),      j.at("sw").get<int>()};
    if (type == "inception") return InceptionSpec{j.at("filters").get<int>()};
    if (type == "maxpool")
        return MaxPoolSpec{j.at("kh").get<int>(), j.at("kw").get<int>(),
                           j.at("zero_pad").get<bool>(), j.at("sh").get<int>(),
                           j.at("sw").get<int>()};
    if (type == "dropout") return DropoutSpec{j.at("rate").get<double>()};
    if (type == "lstm") return LstmSpec{j.at("units").get<int>()};
    if (type == "dense") return DenseSpec{j.at("units").get<int>()};
    throw ConfigInvalid("unknown layer type '" + type + "'");
}

} // namespace

std::string ArchitectureSpec::to_json() const {
    json j;
    j["time"] = time;
    j["width"] = width;
    j["layers"] = json::array();
    for (const auto& l : layers) j["layers"].push_back(layer_to_json(l));
    return j.dump();
}

ArchitectureSpec ArchitectureSpec::from_json(const std::string& text) {
    const json j = json::parse(text);
    ArchitectureSpec s;
    s.time = j.at("time").get<int>();
    s.width = j.at("width").get<int>();
    for (const auto& lj : j.at("layers")) s.layers.push_back(layer_from_json(lj));
    return s;
}

std::vector<StageShape> infer_shapes(const ArchitectureSpec& spec) {
    return build_layers(spec).shapes;
}

namespace {

void push_conv_block(ArchitectureSpec& s) {
    s.layers.push_back(Conv2DSpec{32, 1, 2, false, 1, 2});
    s.layers.push_back(Conv2DSpec{32, 4, 1, true, 1, 1});
    s.layers.push_back(Conv2DSpec{32, 4, 1, true, 1, 1});
}

void push_tail(ArchitectureSpec& s) {
    s.layers.push_back(InceptionSpec{64});
    s.layers.push_back(DropoutSpec{0.2});
    s.layers.push_back(LstmSpec{64});
    s.layers.push_back(DenseSpec{3});
}

} // namespace

ArchitectureSpec deeplob_full() {
    ArchitectureSpec s;
    s.time = 100;
    s.width = 40;
    push_conv_block(s); // 40 -> 20
    push_conv_block(s); // 20 -> 10
    s.layers.push_back(Conv2DSpec{32, 1, 10, false, 1, 1}); // 10 -> 1
    s.layers.push_back(Conv2DSpec{32, 4, 1, true, 1, 1});
    s.layers.push_back(Conv2DSpec{32, 4, 1, true, 1, 1});
    push_tail(s);
    return s;
}

ArchitectureSpec level1() {
    ArchitectureSpec s;
    s.time = 100;
    s.width = 4;
    push_conv_block(s); // 4 -> 2
    push_conv_block(s); // 2 -> 1
    push_tail(s);
    return s;
}

ArchitectureSpec slim(int width) {
    ArchitectureSpec s;
    s.time = 100;
    s.width = width;
    s.layers.push_back(Conv2DSpec{32, 1, 2, false, 1, 1}); // width -> width-1
    s.layers.push_back(Conv2DSpec{32, 4, 1, true, 1, 1});
    s.layers.push_back(Conv2DSpec{32, 4, 1, true, 1, 1});
    push_tail(s);
    return s;
}

ArchitectureSpec preset_by_name(const std::string& name, int width) {
    if (name == "deeplob_full") return deeplob_full();
    if (name == "level1") return level1();
    if (name == "slim") return slim(width);
    throw ConfigInvalid("unknown model preset '" + name + "'");
}

} // namespace lob::nn
