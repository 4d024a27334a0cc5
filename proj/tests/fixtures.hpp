#pragma once

// Expected values for small hand-checkable cases, computed independently
// from the defining recursions and integrals in exact rational arithmetic
// and frozen here as doubles.  Mesh shorthand: U3/U4 are uniform knot
// sequences with 3/4 intervals; NU3 = {0, 1/5, 1/2, 1}; NU4 = {0, 0.15,
// 0.4, 0.7, 1}.  Suffixes name the order m and the active set.

#include <vector>

namespace fixtures {


static const std::vector<double> kBasisX = {0.0, 0.075, 0.15, 0.25, 0.4, 0.55, 0.7, 0.9, 1.0};

// kBasisM3NU4: 9x6
static const std::vector<std::vector<double>> kBasisM3NU4 = {
  {1.0, 0.0, 0.0, 0.0, 0.0, 0.0},
  {0.25, 0.65625, 0.09375, 0.0, 0.0, 0.0},
  {0.0, 0.625, 0.375, 0.0, 0.0, 0.0},
  {0.0, 0.225, 0.7022727272727273, 0.07272727272727272, 0.0, 0.0},
  {0.0, 0.0, 0.5454545454545454, 0.45454545454545453, 0.0, 0.0},
  {0.0, 0.0, 0.13636363636363635, 0.7386363636363636, 0.125, 0.0},
  {0.0, 0.0, 0.0, 0.5, 0.5, 0.0},
  {0.0, 0.0, 0.0, 0.05555555555555555, 0.5, 0.4444444444444444},
  {0.0, 0.0, 0.0, 0.0, 0.0, 1.0}};

// kBasisDerivM3NU4: 9x6
static const std::vector<std::vector<double>> kBasisDerivM3NU4 = {
  {-13.333333333333334, 13.333333333333334, 0.0, 0.0, 0.0, 0.0},
  {-6.666666666666667, 4.166666666666667, 2.5, 0.0, 0.0, 0.0},
  {0.0, -5.0, 5.0, 0.0, 0.0, 0.0},
  {0.0, -3.0, 1.5454545454545454, 1.4545454545454546, 0.0, 0.0},
  {0.0, 0.0, -3.6363636363636362, 3.6363636363636362, 0.0, 0.0},
  {0.0, 0.0, -1.8181818181818181, 0.15151515151515152, 1.6666666666666667, 0.0},
  {0.0, 0.0, 0.0, -3.3333333333333335, 3.3333333333333335, 0.0},
  {0.0, 0.0, 0.0, -1.1111111111111112, -3.3333333333333335, 4.444444444444445},
  {0.0, 0.0, 0.0, 0.0, -6.666666666666667, 6.666666666666667}};

static const std::vector<double> kL1NormM3NU4 = {0.05, 0.13333333333333333, 0.23333333333333334, 0.2833333333333333, 0.2, 0.1};

// kDtilde1M3NU3: 4x5
static const std::vector<std::vector<double>> kDtilde1M3NU3 = {
  {-10.0, 10.0, 0.0, 0.0, 0.0},
  {0.0, -4.0, 4.0, 0.0, 0.0},
  {0.0, 0.0, -2.5, 2.5, 0.0},
  {0.0, 0.0, 0.0, -4.0, 4.0}};

// kDtilde2M3NU3: 3x5
static const std::vector<std::vector<double>> kDtilde2M3NU3 = {
  {50.0, -70.0, 20.0, 0.0, 0.0},
  {0.0, 13.333333333333334, -21.666666666666668, 8.333333333333334, 0.0},
  {0.0, 0.0, 5.0, -13.0, 8.0}};

// kDtilde3M3NU3: 2x5
static const std::vector<std::vector<double>> kDtilde3M3NU3 = {
  {-50.0, 83.33333333333333, -41.666666666666664, 8.333333333333334, 0.0},
  {0.0, -13.333333333333334, 26.666666666666668, -21.333333333333332, 8.0}};

// kFM3NU4Alpha2: 5x6
static const std::vector<std::vector<double>> kFM3NU4Alpha2 = {
  {1.0, 0.0, 0.0, 0.0, 0.0, 0.0},
  {0.0, 1.0, 0.42857142857142855, 0.0, 0.0, 0.0},
  {0.0, 0.0, 0.5714285714285714, 0.7058823529411765, 0.0, 0.0},
  {0.0, 0.0, 0.0, 0.29411764705882354, 1.0, 0.0},
  {0.0, 0.0, 0.0, 0.0, 0.0, 1.0}};

static const std::vector<double> kXiM3NU4Alpha2 = {20.0, 4.285714285714286, 3.0, 3.5294117647058822, 10.0};

static const std::vector<double> kTauM3NU4Alpha2 = {0.0, 0.0, 0.0, 0.15, 0.7, 1.0, 1.0, 1.0};

// kZ2M2NU3Alpha1L10: 3x11
static const std::vector<std::vector<double>> kZ2M2NU3Alpha1L10 = {
  {1.0, 0.8, 0.6, 0.4, 0.2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0},
  {0.0, 0.2, 0.4, 0.6, 0.8, 1.0, 0.8, 0.6, 0.4, 0.2, 0.0},
  {0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.2, 0.4, 0.6, 0.8, 1.0}};

// kX2M2NU3L10: 4x11
static const std::vector<std::vector<double>> kX2M2NU3L10 = {
  {1.0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0},
  {0.0, 0.5, 1.0, 0.6666666666666666, 0.3333333333333333, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0},
  {0.0, 0.0, 0.0, 0.3333333333333333, 0.6666666666666666, 1.0, 0.8, 0.6, 0.4, 0.2, 0.0},
  {0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.2, 0.4, 0.6, 0.8, 1.0}};

// kGramM3NU3: 5x5
static const std::vector<std::vector<double>> kGramM3NU3 = {
  {0.6, 0.36, 0.04, 0.0, 0.0},
  {0.144, 0.52, 0.3225, 0.0135, 0.0},
  {0.008, 0.16125, 0.555, 0.2445, 0.03125},
  {0.0, 0.0084375, 0.305625, 0.475, 0.2109375},
  {0.0, 0.0, 0.0625, 0.3375, 0.6}};

static const double kGramM3NU3InvInf = 10.222257551669315;

// kGramM3NU3Alpha1: 4x4
static const std::vector<std::vector<double>> kGramM3NU3Alpha1 = {
  {0.6, 0.35, 0.05, 0.0},
  {0.175, 0.5, 0.3, 0.025},
  {0.025, 0.3, 0.5, 0.175},
  {0.0, 0.05, 0.35, 0.6}};

static const double kGramM3NU3Alpha1InvInf = 10.0;

// kLambdaHatM2U3: 4x4
static const std::vector<std::vector<double>> kLambdaHatM2U3 = {
  {0.3333333333333333, 0.16666666666666666, 0.0, 0.0},
  {0.16666666666666666, 0.6666666666666666, 0.16666666666666666, 0.0},
  {0.0, 0.16666666666666666, 0.6666666666666666, 0.16666666666666666},
  {0.0, 0.0, 0.16666666666666666, 0.3333333333333333}};

// kLambdaM2U4N12: 5x5
static const std::vector<std::vector<double>> kLambdaM2U4N12 = {
  {0.5185185185185185, 0.14814814814814814, 0.0, 0.0, 0.0},
  {0.14814814814814814, 0.7037037037037037, 0.14814814814814814, 0.0, 0.0},
  {0.0, 0.14814814814814814, 0.7037037037037037, 0.14814814814814814, 0.0},
  {0.0, 0.0, 0.14814814814814814, 0.7037037037037037, 0.14814814814814814},
  {0.0, 0.0, 0.0, 0.14814814814814814, 0.18518518518518517}};

static const std::vector<double> kY12 = {-0.75, -0.25, -0.625, 0.125, 0.375, -0.125, 0.5, 1.125, 0.75, 1.5, 1.25, 2.0, 1.625};

static const std::vector<double> kYbarM2U4N12 = {-0.375, -0.05555555555555555, 0.5138888888888888, 1.2916666666666667, 0.5833333333333334};

// QP solution: alpha=(1,)
static const std::vector<double> kQpBhatM2U4N12 = {-0.6700412448443944, -0.08539557555305587, 0.4992500937382827, 1.2834176977877765, 2.1232658417697787};

static const std::vector<double> kQpChiM2U4N12 = {0.0037300024996875392};

static const double kQpObjM2U4N12 = -1.7044441710411198;
static const std::vector<int> kQpAlphaM2U4N12 = {1};

static const double kLipExactM2U4N12 = 8.418653015517517;

static const std::vector<double> kProjX2BbarM2U4N12 = {-0.006114206912079253, 0.05264972419227738, 0.24040301699876168, 0.5554359450636046, 0.9806512439491163};

// noise-free projection active set: ()

} // namespace fixtures
