#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "mrecnn/align.hpp"
#include "mrecnn/dataset.hpp"
#include "mrecnn/error.hpp"
#include "mrecnn/image.hpp"
#include "mrecnn/preprocess.hpp"
#include "testutil.hpp"

using namespace mrecnn;

namespace {

ImageBuffer random_image(int w, int h, int c, Rng& rng) {
    ImageBuffer img(w, h, c);
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.below(256));
    return img;
}

bool images_equal(const ImageBuffer& a, const ImageBuffer& b) {
    return a.width == b.width && a.height == b.height && a.channels == b.channels &&
           a.pixels == b.pixels;
}

double angle_diff(double a, double b) {
    double d = a - b;
    while (d > std::numbers::pi) d -= 2.0 * std::numbers::pi;
    while (d < -std::numbers::pi) d += 2.0 * std::numbers::pi;
    return std::abs(d);
}

Landmarks68 transformed(const Landmarks68& base, const SimilarityTransform& t) {
    Landmarks68 out;
    for (int i = 0; i < 68; ++i) {
        const Point2 q = t.apply(base[i]);
        out[i] = q;
    }
    return out;
}

} // namespace

TEST_CASE("estimate_similarity on identical point sets is the identity") {
    const Landmarks68 tmpl = canonical_template(224);
    const SimilarityTransform t = estimate_similarity(tmpl, tmpl);
    CHECK(t.scale == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(std::abs(t.theta) <= 1e-9);
    CHECK(std::abs(t.tx) <= 1e-6);
    CHECK(std::abs(t.ty) <= 1e-6);
}

TEST_CASE("estimate_similarity recovers a pure doubling") {
    const Landmarks68 tmpl = canonical_template(100);
    SimilarityTransform doubling;
    doubling.scale = 2.0;
    const Landmarks68 target = transformed(tmpl, doubling);
    const SimilarityTransform t = estimate_similarity(tmpl, target);
    CHECK(t.scale == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(std::abs(t.theta) <= 1e-9);
    CHECK(std::abs(t.tx) <= 1e-6);
    CHECK(std::abs(t.ty) <= 1e-6);
}

TEST_CASE("estimate_similarity recovers random synthetic similarities") {
    const Landmarks68 tmpl = canonical_template(224);
    Rng rng(101);
    for (int draw = 0; draw < 25; ++draw) {
        SimilarityTransform want;
        want.scale = rng.uniform(0.5, 2.0);
        want.theta = rng.uniform(-std::numbers::pi, std::numbers::pi);
        want.tx = rng.uniform(-50.0, 50.0);
        want.ty = rng.uniform(-50.0, 50.0);
        const Landmarks68 moved = transformed(tmpl, want);
        const SimilarityTransform got = estimate_similarity(tmpl, moved);
        CHECK(std::abs(got.scale - want.scale) <= 1e-4);
        CHECK(angle_diff(got.theta, want.theta) <= 1e-4);
        CHECK(std::abs(got.tx - want.tx) <= 1e-4);
        CHECK(std::abs(got.ty - want.ty) <= 1e-4);
    }
}

TEST_CASE("degenerate landmark sets are rejected") {
    Landmarks68 collapsed;
    for (int i = 0; i < 68; ++i) collapsed[i] = {5.0, 5.0};
    const Landmarks68 tmpl = canonical_template(64);
    CHECK_THROWS_AS(estimate_similarity(collapsed, tmpl), DataError);
    CHECK_THROWS_AS(estimate_similarity(tmpl, collapsed), DataError);
}

TEST_CASE("warp_resize with the identity is the identity on integer grids") {
    Rng rng(103);
    const ImageBuffer img = random_image(12, 12, 3, rng);
    const ImageBuffer out = warp_resize(img, SimilarityTransform::identity(), 12);
    CHECK(images_equal(img, out));
}

TEST_CASE("warp_resize keeps constant images constant") {
    ImageBuffer img(9, 9, 1);
    for (auto& p : img.pixels) p = 77;
    SimilarityTransform t;
    t.scale = 1.7;
    t.theta = 0.6;
    t.tx = -4.0;
    t.ty = 2.5;
    const ImageBuffer out = warp_resize(img, t, 16);
    for (auto p : out.pixels) CHECK(p == 77);
}

TEST_CASE("a 90 degree rotation lands pixels where the transform says") {
    Rng rng(107);
    ImageBuffer img = random_image(4, 4, 1, rng);
    const ImageBuffer out = rotate_about_center(img, 90.0);
    // inverse map of +90 degrees about (1.5, 1.5): source = (y, 3 - x)
    for (int y = 0; y < 4; ++y) {
        for (int x = 0; x < 4; ++x) {
            CHECK(out.at(x, y, 0) == img.at(y, 3 - x, 0));
        }
    }
}

TEST_CASE("shipped region boxes sit where the face geometry demands") {
    const int size = 224;
    const Landmarks68 tmpl = canonical_template(size);
    const SquareBox eye = region_box(region_def("left_eye"), tmpl);
    const SquareBox mouth = region_box(region_def("mouth"), tmpl);
    const SquareBox nose = region_box(region_def("nose"), tmpl);
    const SquareBox whole = region_box(region_def("whole_face"), tmpl);

    CHECK(eye.cy < size / 2.0);    // upper half
    CHECK(mouth.cy > size / 2.0);  // lower half
    // disjoint: the eye box ends above the mouth box
    CHECK(eye.cy + eye.half < mouth.cy - mouth.half);
    for (const auto* box : {&eye, &mouth, &nose, &whole}) CHECK(box->half > 0.0);
    CHECK(region_names().size() == 4);
}

TEST_CASE("crop_region emits out_size squares for every shipped region") {
    Rng rng(109);
    const ImageBuffer aligned = random_image(64, 64, 3, rng);
    const Landmarks68 tmpl = canonical_template(64);
    for (const auto& name : region_names()) {
        const ImageBuffer crop = crop_region(aligned, region_def(name), tmpl, 64);
        CHECK(crop.width == 64);
        CHECK(crop.height == 64);
        CHECK(crop.channels == 3);
    }
}

TEST_CASE("offline_augment emits exactly fifteen variants") {
    Rng rng(113);
    const ImageBuffer img = random_image(24, 24, 1, rng);
    const auto variants = offline_augment(img, 7);
    CHECK(variants.size() == 15);
    for (const auto& v : variants) {
        CHECK(v.width == img.width);
        CHECK(v.height == img.height);
    }
}

TEST_CASE("the hflip variant is an involution") {
    Rng rng(127);
    const ImageBuffer img = random_image(17, 9, 3, rng);
    const auto variants = offline_augment(img, 1);
    CHECK(images_equal(hflip(variants[0]), img));
}

TEST_CASE("noise-free variants ignore the seed; noisy ones use it") {
    Rng rng(131);
    const ImageBuffer img = random_image(16, 16, 1, rng);
    const auto a = offline_augment(img, 1);
    const auto b = offline_augment(img, 2);
    for (int i = 0; i < 9; ++i) CHECK(images_equal(a[static_cast<std::size_t>(i)], b[static_cast<std::size_t>(i)]));
    bool any_noise_diff = false;
    for (int i = 9; i < 15; ++i) {
        if (!images_equal(a[static_cast<std::size_t>(i)], b[static_cast<std::size_t>(i)])) any_noise_diff = true;
    }
    CHECK(any_noise_diff);

    const auto c = offline_augment(img, 1);
    for (int i = 0; i < 15; ++i) CHECK(images_equal(a[static_cast<std::size_t>(i)], c[static_cast<std::size_t>(i)]));
}

TEST_CASE("noise deviation tracks the folded-Gaussian prediction") {
    ImageBuffer img(64, 64, 1);
    for (auto& p : img.pixels) p = 128;
    const auto variants = offline_augment(img, 99);
    const ImageBuffer& noisy = variants[10]; // variance 0.01 on the original
    double mad = 0.0;
    for (std::size_t i = 0; i < noisy.pixels.size(); ++i) {
        mad += std::abs(noisy.pixels[i] / 255.0 - img.pixels[i] / 255.0);
    }
    mad /= static_cast<double>(noisy.pixels.size());
    const double expected = std::sqrt(2.0 * 0.01 / std::numbers::pi); // 0.0798
    CHECK(mad > 0.8 * expected);
    CHECK(mad < 1.2 * expected);
}

TEST_CASE("to_tensor scales, replicates gray and subtracts the mean") {
    ImageBuffer white(4, 4, 1);
    for (auto& p : white.pixels) p = 255;
    const Tensor t = to_tensor(white, {0.0f, 0.0f, 0.0f});
    REQUIRE(t.shape() == std::vector<int>({1, 3, 4, 4}));
    for (std::size_t i = 0; i < t.numel(); ++i) CHECK(t[i] == 1.0f);

    const ImageBuffer black(4, 4, 3);
    const Tensor z = to_tensor(black, {0.0f, 0.0f, 0.0f});
    for (std::size_t i = 0; i < z.numel(); ++i) CHECK(z[i] == 0.0f);

    ImageBuffer gray(2, 2, 1);
    for (auto& p : gray.pixels) p = 100;
    const Tensor g = to_tensor(gray, {0.1f, 0.2f, 0.3f});
    CHECK(g.at4(0, 0, 0, 0) == doctest::Approx(100.0 / 255.0 - 0.1));
    CHECK(g.at4(0, 1, 0, 0) == doctest::Approx(100.0 / 255.0 - 0.2));
    CHECK(g.at4(0, 2, 0, 0) == doctest::Approx(100.0 / 255.0 - 0.3));
}

TEST_CASE("to_tensor roundtrips through from_tensor within one quantum") {
    Rng rng(137);
    const ImageBuffer img = random_image(9, 7, 3, rng);
    const std::array<float, 3> mean = {0.1f, 0.2f, 0.3f};
    const ImageBuffer back = from_tensor(to_tensor(img, mean), mean);
    REQUIRE(back.pixels.size() == img.pixels.size());
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        CHECK(std::abs(static_cast<int>(back.pixels[i]) - static_cast<int>(img.pixels[i])) <= 1);
    }
}

TEST_CASE("pad_crop at the centered offset is the identity") {
    Rng rng(139);
    const ImageBuffer img = random_image(10, 10, 3, rng);
    CHECK(images_equal(pad_crop(img, 4, 4, 4), img));
    const ImageBuffer shifted = pad_crop(img, 4, 0, 8);
    CHECK(shifted.width == 10);
    CHECK_THROWS_AS(pad_crop(img, 4, 9, 0), std::invalid_argument);
}

TEST_CASE("PNM images roundtrip through disk") {
    Rng rng(149);
    const std::string path = "/tmp/mrecnn_test_img";
    {
        const ImageBuffer gray = random_image(13, 6, 1, rng);
        write_pnm(gray, path + ".pgm");
        CHECK(images_equal(read_pnm(path + ".pgm"), gray));
    }
    {
        const ImageBuffer rgb = random_image(6, 13, 3, rng);
        write_pnm(rgb, path + ".ppm");
        CHECK(images_equal(read_pnm(path + ".ppm"), rgb));
    }
    CHECK_THROWS_AS(read_pnm("/tmp/mrecnn_no_such_file.pgm"), DataError);
    {
        std::ofstream bad(path + ".pgm", std::ios::binary | std::ios::trunc);
        bad << "P5\n13 6\n255\n"; // header promises pixels that never come
    }
    CHECK_THROWS_AS(read_pnm(path + ".pgm"), DataError);
    std::remove((path + ".pgm").c_str());
    std::remove((path + ".ppm").c_str());
}

TEST_CASE("pts68 files roundtrip and validate") {
    const Landmarks68 tmpl = canonical_template(128);
    const std::string path = "/tmp/mrecnn_test_landmarks.pts68";
    write_pts68(tmpl, path);
    const Landmarks68 back = read_pts68(path);
    for (int i = 0; i < 68; ++i) {
        CHECK(back[i].x == doctest::Approx(tmpl[i].x).epsilon(1e-12));
        CHECK(back[i].y == doctest::Approx(tmpl[i].y).epsilon(1e-12));
    }
    {
        std::ofstream bad(path, std::ios::trunc);
        bad << "1.0 2.0\n3.0 4.0\n"; // far fewer than 68 lines
    }
    CHECK_THROWS_WITH_AS(read_pts68(path), doctest::Contains("68"), DataError);
    std::remove(path.c_str());
}

TEST_CASE("manifests parse and validate") {
    const std::string path = "/tmp/mrecnn_test_manifest.csv";
    {
        std::ofstream out(path, std::ios::trunc);
        out << "image,landmarks,label,clip_id\n";
        out << "a.ppm,a.ppm.pts68,3,\n";
        out << "clip/b.pgm,clip/b.pts68,6,vid01\n";
    }
    const auto rows = read_dataset_manifest(path);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].label == 3);
    CHECK(rows[0].clip_id.empty());
    CHECK(rows[1].clip_id == "vid01");
    CHECK(rows[1].image.ends_with("clip/b.pgm"));

    {
        std::ofstream out(path, std::ios::trunc);
        out << "face,region,label\n"; // wrong header
    }
    CHECK_THROWS_WITH_AS(read_dataset_manifest(path), doctest::Contains("header"), DataError);

    {
        std::ofstream out(path, std::ios::trunc);
        out << "image,landmarks,label,clip_id\n";
        out << "a.ppm,a.pts68,seven,\n";
    }
    CHECK_THROWS_WITH_AS(read_dataset_manifest(path), doctest::Contains("label"), DataError);
    std::remove(path.c_str());
}

TEST_CASE("pair manifests roundtrip") {
    const std::string path = "/tmp/mrecnn_test_pairs.csv";
    const std::vector<PairRow> rows = {
        {"face0.pgm", "eye0.pgm", 2, "clipA"},
        {"face1.pgm", "eye1.pgm", 5, ""},
    };
    write_pair_manifest(rows, path);
    const auto back = read_pair_manifest(path);
    REQUIRE(back.size() == 2);
    CHECK(back[0].label == 2);
    CHECK(back[0].clip_id == "clipA");
    CHECK(back[1].face.ends_with("face1.pgm"));
    CHECK(back[1].clip_id.empty());
    std::remove(path.c_str());
}
