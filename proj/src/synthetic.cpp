#include "memrl/synthetic.hpp"

#include <array>
#include <random>
#include <stdexcept>

namespace memrl::synthetic {

namespace {

constexpr std::array<const char*, 16> kFirstNames{
    "Elena", "Marcus", "Ingrid", "Tobias", "Priya",  "Ansel",  "Maren", "Dmitri",
    "Celia", "Rafael", "Noor",   "Hollis", "Yusuf",  "Beatrix", "Oren",  "Salome"};
constexpr std::array<const char*, 16> kLastNames{
    "Vasquel", "Obornet", "Kaldri",  "Fennmore", "Ashgrove", "Belmonte", "Quarrow", "Istvane",
    "Morrow",  "Talvik",  "Grenfall", "Ochoari",  "Pellham",  "Sandoval", "Virelli", "Hartwick"};
constexpr std::array<const char*, 16> kCities{
    "Quito",   "Tallinn", "Windhoek", "Asmara",  "Suva",    "Tbilisi", "Maseru", "Apia",
    "Bishkek", "Nouakchott", "Thimphu", "Vaduz", "Gitega",  "Funafuti", "Roseau", "Palikir"};
constexpr std::array<const char*, 8> kFillerSentences{
    "The folder also lists routine correspondence from that season.",
    "Most pages cover shipping manifests and weather logs.",
    "A marginal stamp dates the bundle to the spring audit.",
    "Several receipts were clipped to the inner cover.",
    "The remaining entries describe minor repairs to the reading room.",
    "An index card notes that duplicates were sent to the annex.",
    "The closing page carries an illegible registrar signature.",
    "Two loose sheets summarize postage owed for the quarter.",
};

std::string filler_person(std::mt19937_64& rng, std::size_t tag) {
    // Distinct from the chain pools: synthesized stems plus a numeric tag.
    static constexpr std::array<const char*, 10> kStems{
        "Torvald", "Miresse", "Gallowin", "Serapho", "Dunmoor",
        "Ethelry", "Vonquist", "Araminel", "Oskarev", "Lumbright"};
    return std::string(kStems[rng() % kStems.size()]) + std::to_string(tag);
}

std::string filler_place(std::mt19937_64& rng, std::size_t tag) {
    static constexpr std::array<const char*, 10> kStems{
        "Bruxum", "Kalvport", "Yendel", "Ostrev", "Marnholm",
        "Tesqua", "Virelle", "Qoristan", "Zebrinsk", "Fallowmere"};
    return std::string(kStems[rng() % kStems.size()]) + std::to_string(tag);
}

}  // namespace

std::vector<corpus::QASample> make_synthetic_samples(const SyntheticSpec& spec) {
    if (spec.hops < 2) throw std::invalid_argument("synthetic samples need at least 2 hops");
    if (spec.doc_count < static_cast<std::size_t>(spec.hops)) {
        throw std::invalid_argument("doc_count below hop count");
    }
    std::vector<corpus::QASample> samples;
    for (std::size_t s = 0; s < spec.sample_count; ++s) {
        std::mt19937_64 rng(corpus::mix_seed(spec.seed, "synthetic", s));
        corpus::QASample sample;
        sample.id = "syn-" + std::to_string(spec.seed) + "-" + std::to_string(s);

        // Chain: person -> mentors -> city. Full names stay distinct so hop
        // facts never conflate.
        std::vector<std::string> chain;
        while (chain.size() < static_cast<std::size_t>(spec.hops)) {
            std::string name = std::string(kFirstNames[rng() % kFirstNames.size()]) + " " +
                               kLastNames[rng() % kLastNames.size()];
            bool duplicate = false;
            for (const auto& existing : chain) duplicate |= existing == name;
            if (!duplicate) chain.push_back(std::move(name));
        }
        const std::string city = kCities[rng() % kCities.size()];
        sample.question = "In which city did the mentor chain starting from " + chain[0] +
                          " finally work?";
        sample.answers = {city};

        for (int h = 0; h < spec.hops; ++h) {
            corpus::Document doc;
            doc.title = "Dossier " + std::to_string(s) + "-" + std::to_string(h + 1);
            if (h + 1 < spec.hops) {
                doc.body = chain[h] + " studied under " + chain[h + 1] + ".";
            } else {
                doc.body = chain[h] + " worked in " + city + ".";
            }
            sample.evidence_docs.push_back(std::move(doc));
        }

        const std::size_t distractor_count = spec.doc_count - spec.hops;
        for (std::size_t d = 0; d < distractor_count; ++d) {
            corpus::Document doc;
            doc.title = "Archive file " + std::to_string(s) + "-" + std::to_string(d);
            const std::string a = filler_person(rng, d * 2);
            const std::string b = filler_person(rng, d * 2 + 1);
            const std::string place = filler_place(rng, d);
            doc.body = a + " studied under " + b + ". " + b + " worked in " + place + ". ";
            const std::size_t filler_lines = 2 + rng() % 3;
            for (std::size_t f = 0; f < filler_lines; ++f) {
                doc.body += std::string(kFillerSentences[rng() % kFillerSentences.size()]);
                if (f + 1 < filler_lines) doc.body += " ";
            }
            sample.distractor_docs.push_back(std::move(doc));
        }
        samples.push_back(std::move(sample));
    }
    return samples;
}

}  // namespace memrl::synthetic
