//! Pure value-semantic polarization kernel.
//!
//! Linear-polarization states in the H/V basis, 2x2 unitary optical actions
//! (Jones calculus), two-channel projective measurement with conditional
//! collapse, and small computational-basis states for up to three qubits.
//!
//! Angle convention: H is 0 rad, angles grow counterclockwise, and the
//! linear-polarization ket at angle theta is
//! `|theta> = cos(theta)|H> + sin(theta)|V>`. A two-channel analyzer at
//! orientation theta transmits the `|theta>` component and reflects the
//! orthogonal `|theta + pi/2>` component. All probability identities hold to
//! [`NORM_TOL`]; user-supplied matrices must be unitary to [`UNITARY_TOL`].

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tolerance for norms and probability identities.
pub const NORM_TOL: f64 = 1e-12;
/// Tolerance for the unitarity check on operator matrices.
pub const UNITARY_TOL: f64 = 1e-9;

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

fn finite(c: Complex64) -> bool {
    c.re.is_finite() && c.im.is_finite()
}

/// Which photon of a pair an operator acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhotonIndex {
    One,
    Two,
}

/// Output port of a two-channel polarizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    Transmission,
    Reflection,
}

impl Channel {
    pub fn label(self) -> &'static str {
        match self {
            Channel::Transmission => "T",
            Channel::Reflection => "R",
        }
    }
}

impl std::fmt::Display for Channel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Analyzer orientation, canonicalized to [0, pi) radians from the H axis.
///
/// Orientations that differ by pi address the same measurement, so the
/// canonical range loses nothing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyzerOrientation {
    radians: f64,
}

impl AnalyzerOrientation {
    pub fn from_radians(radians: f64) -> Self {
        let wrapped = radians.rem_euclid(std::f64::consts::PI);
        // rem_euclid can return exactly pi when the input is a tiny negative.
        let radians = if wrapped >= std::f64::consts::PI {
            0.0
        } else {
            wrapped
        };
        Self { radians }
    }

    pub fn from_degrees(degrees: f64) -> Self {
        Self::from_radians(degrees.to_radians())
    }

    pub fn radians(self) -> f64 {
        self.radians
    }

    /// State sent to the given output port.
    pub fn channel_state(self, channel: Channel) -> SinglePhotonState {
        match channel {
            Channel::Transmission => SinglePhotonState::linear(self.radians),
            Channel::Reflection => {
                SinglePhotonState::linear(self.radians + std::f64::consts::FRAC_PI_2)
            }
        }
    }
}

/// Normalized single-photon polarization state in the H/V basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinglePhotonState {
    amp_h: Complex64,
    amp_v: Complex64,
}

impl SinglePhotonState {
    /// Builds a state from amplitudes that must already be normalized.
    pub fn new(amp_h: Complex64, amp_v: Complex64) -> Result<Self> {
        if !finite(amp_h) || !finite(amp_v) {
            return Err(Error::NonFiniteAmplitude);
        }
        let norm_sq = amp_h.norm_sqr() + amp_v.norm_sqr();
        if (norm_sq - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm_sq });
        }
        Ok(Self { amp_h, amp_v })
    }

    /// Builds a state by rescaling arbitrary non-zero amplitudes.
    pub fn normalized(amp_h: Complex64, amp_v: Complex64) -> Result<Self> {
        if !finite(amp_h) || !finite(amp_v) {
            return Err(Error::NonFiniteAmplitude);
        }
        let norm_sq = amp_h.norm_sqr() + amp_v.norm_sqr();
        if norm_sq <= NORM_TOL {
            return Err(Error::NotNormalized { norm_sq });
        }
        let inv = norm_sq.sqrt().recip();
        Ok(Self {
            amp_h: amp_h * inv,
            amp_v: amp_v * inv,
        })
    }

    /// Linear polarization at `angle` radians from H.
    pub fn linear(angle: f64) -> Self {
        Self {
            amp_h: real(angle.cos()),
            amp_v: real(angle.sin()),
        }
    }

    pub fn horizontal() -> Self {
        Self::linear(0.0)
    }

    pub fn vertical() -> Self {
        Self::linear(std::f64::consts::FRAC_PI_2)
    }

    pub fn amp_h(self) -> Complex64 {
        self.amp_h
    }

    pub fn amp_v(self) -> Complex64 {
        self.amp_v
    }

    /// <self|other>.
    pub fn inner(self, other: Self) -> Complex64 {
        self.amp_h.conj() * other.amp_h + self.amp_v.conj() * other.amp_v
    }

    /// Born probability of landing in the given analyzer channel.
    pub fn channel_probability(self, analyzer: AnalyzerOrientation, channel: Channel) -> f64 {
        analyzer.channel_state(channel).inner(self).norm_sqr()
    }

    /// True when the two states agree up to a global phase.
    pub fn coincides_up_to_phase(self, other: Self) -> bool {
        (self.inner(other).norm() - 1.0).abs() <= 1e-9
    }
}

fn real(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// A 2x2 unitary Jones matrix acting on single-photon states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JonesOperator {
    m: [[Complex64; 2]; 2],
}

impl JonesOperator {
    /// Wraps a matrix, rejecting anything that is not unitary to
    /// [`UNITARY_TOL`] elementwise.
    pub fn new(m: [[Complex64; 2]; 2]) -> Result<Self> {
        for row in &m {
            for &c in row {
                if !finite(c) {
                    return Err(Error::NonFiniteAmplitude);
                }
            }
        }
        let mut deviation = 0.0_f64;
        // M†M - I, elementwise.
        for i in 0..2 {
            for j in 0..2 {
                let mut s = Complex64::new(0.0, 0.0);
                for k in 0..2 {
                    s += m[k][i].conj() * m[k][j];
                }
                let expected = if i == j { 1.0 } else { 0.0 };
                deviation = deviation.max((s - real(expected)).norm());
            }
        }
        if deviation > UNITARY_TOL {
            return Err(Error::NonUnitary { deviation });
        }
        Ok(Self { m })
    }

    pub fn identity() -> Self {
        Self {
            m: [
                [real(1.0), real(0.0)],
                [real(0.0), real(1.0)],
            ],
        }
    }

    pub fn matrix(&self) -> &[[Complex64; 2]; 2] {
        &self.m
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self {
            m: [
                [self.m[0][0].conj(), self.m[1][0].conj()],
                [self.m[0][1].conj(), self.m[1][1].conj()],
            ],
        }
    }

    /// `self * rhs` as operators (rhs acts first).
    pub fn compose(&self, rhs: &Self) -> Self {
        let mut m = [[Complex64::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    m[i][j] += self.m[i][k] * rhs.m[k][j];
                }
            }
        }
        Self { m }
    }

    pub fn apply(&self, state: SinglePhotonState) -> SinglePhotonState {
        let h = self.m[0][0] * state.amp_h + self.m[0][1] * state.amp_v;
        let v = self.m[1][0] * state.amp_h + self.m[1][1] * state.amp_v;
        // Unitary action on a normalized state stays normalized.
        SinglePhotonState { amp_h: h, amp_v: v }
    }

    pub fn is_identity(&self) -> bool {
        let mut dev = 0.0_f64;
        for i in 0..2 {
            for j in 0..2 {
                let expected = if i == j { 1.0 } else { 0.0 };
                dev = dev.max((self.m[i][j] - real(expected)).norm());
            }
        }
        dev <= NORM_TOL
    }
}

/// Constructible optical elements.
///
/// Angles in radians. `HalfWavePlate { theta }` has its fast axis at theta:
/// it fixes `|theta>` and flips the sign of `|theta + pi/2>`.
/// `Rotator { theta }` maps `|phi>` to `|phi + theta>`. `PockelsRotator` is
/// the same rotation action, tagged separately because it is the element a
/// trigger signal switches on. `Custom` takes any unitary matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OpticalElement {
    HalfWavePlate { theta: f64 },
    Rotator { theta: f64 },
    PockelsRotator { theta: f64 },
    Custom { m: [[Complex64; 2]; 2] },
}

/// Builds the Jones operator for an element.
pub fn make_element(element: OpticalElement) -> Result<JonesOperator> {
    match element {
        OpticalElement::HalfWavePlate { theta } => {
            if !theta.is_finite() {
                return Err(Error::NonFiniteAmplitude);
            }
            let (s, c) = (2.0 * theta).sin_cos();
            JonesOperator::new([
                [real(c), real(s)],
                [real(s), real(-c)],
            ])
        }
        OpticalElement::Rotator { theta } | OpticalElement::PockelsRotator { theta } => {
            if !theta.is_finite() {
                return Err(Error::NonFiniteAmplitude);
            }
            let (s, c) = theta.sin_cos();
            JonesOperator::new([
                [real(c), real(-s)],
                [real(s), real(c)],
            ])
        }
        OpticalElement::Custom { m } => JonesOperator::new(m),
    }
}

/// Two-photon polarization state; amplitudes indexed (HH, HV, VH, VV).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPhotonState {
    amps: [Complex64; 4],
}

/// Basis index helpers: photon 1 selects the pair of slots, photon 2 the
/// slot within the pair (HH=0, HV=1, VH=2, VV=3).
const fn idx(i1: usize, i2: usize) -> usize {
    2 * i1 + i2
}

impl TwoPhotonState {
    pub fn new(amps: [Complex64; 4]) -> Result<Self> {
        let mut norm_sq = 0.0;
        for &a in &amps {
            if !finite(a) {
                return Err(Error::NonFiniteAmplitude);
            }
            norm_sq += a.norm_sqr();
        }
        if (norm_sq - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm_sq });
        }
        Ok(Self { amps })
    }

    /// Product state |s1>|s2>.
    pub fn product(s1: SinglePhotonState, s2: SinglePhotonState) -> Self {
        let a1 = [s1.amp_h, s1.amp_v];
        let a2 = [s2.amp_h, s2.amp_v];
        let mut amps = [Complex64::new(0.0, 0.0); 4];
        for i1 in 0..2 {
            for i2 in 0..2 {
                amps[idx(i1, i2)] = a1[i1] * a2[i2];
            }
        }
        Self { amps }
    }

    pub fn amps(&self) -> &[Complex64; 4] {
        &self.amps
    }

    pub fn amp(&self, first: Channel01, second: Channel01) -> Complex64 {
        self.amps[idx(first as usize, second as usize)]
    }

    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }
}

/// H/V slot selector for raw amplitude access.
#[derive(Debug, Clone, Copy)]
pub enum Channel01 {
    H = 0,
    V = 1,
}

/// The polarization-anticorrelated pair state
/// `(|V>|H> - |H>|V>) / sqrt(2)`.
pub fn singlet() -> TwoPhotonState {
    TwoPhotonState {
        amps: [
            real(0.0),
            real(-FRAC_1_SQRT_2),
            real(FRAC_1_SQRT_2),
            real(0.0),
        ],
    }
}

/// Applies a unitary to one tensor factor of a two-photon state.
pub fn apply_jones_to_photon(
    state: &TwoPhotonState,
    photon: PhotonIndex,
    u: &JonesOperator,
) -> TwoPhotonState {
    let m = u.matrix();
    let mut amps = [Complex64::new(0.0, 0.0); 4];
    match photon {
        PhotonIndex::One => {
            for i2 in 0..2 {
                for i1 in 0..2 {
                    for k in 0..2 {
                        amps[idx(i1, i2)] += m[i1][k] * state.amps[idx(k, i2)];
                    }
                }
            }
        }
        PhotonIndex::Two => {
            for i1 in 0..2 {
                for i2 in 0..2 {
                    for k in 0..2 {
                        amps[idx(i1, i2)] += m[i2][k] * state.amps[idx(i1, k)];
                    }
                }
            }
        }
    }
    TwoPhotonState { amps }
}

/// Joint Born probability of photon 1 exiting `ch1` of an analyzer at `a`
/// and photon 2 exiting `ch2` of an analyzer at `b`.
pub fn joint_probability(
    state: &TwoPhotonState,
    a: AnalyzerOrientation,
    ch1: Channel,
    b: AnalyzerOrientation,
    ch2: Channel,
) -> f64 {
    let s1 = a.channel_state(ch1);
    let s2 = b.channel_state(ch2);
    let proj1 = [s1.amp_h.conj(), s1.amp_v.conj()];
    let proj2 = [s2.amp_h.conj(), s2.amp_v.conj()];
    let mut amp = Complex64::new(0.0, 0.0);
    for i1 in 0..2 {
        for i2 in 0..2 {
            amp += proj1[i1] * proj2[i2] * state.amps[idx(i1, i2)];
        }
    }
    amp.norm_sqr()
}

/// Single-photon marginal: the probability of the chosen photon exiting
/// `channel` of an analyzer at `angle`, summed over the partner's ports.
pub fn marginal_probability(
    state: &TwoPhotonState,
    photon: PhotonIndex,
    angle: AnalyzerOrientation,
    channel: Channel,
) -> f64 {
    let s = angle.channel_state(channel);
    let proj = [s.amp_h.conj(), s.amp_v.conj()];
    let mut p = 0.0;
    match photon {
        PhotonIndex::One => {
            for i2 in 0..2 {
                let amp = proj[0] * state.amps[idx(0, i2)] + proj[1] * state.amps[idx(1, i2)];
                p += amp.norm_sqr();
            }
        }
        PhotonIndex::Two => {
            for i1 in 0..2 {
                let amp = proj[0] * state.amps[idx(i1, 0)] + proj[1] * state.amps[idx(i1, 1)];
                p += amp.norm_sqr();
            }
        }
    }
    p
}

/// Projects photon 1 onto an analyzer port and returns the Born probability
/// of that port together with the normalized conditional state of photon 2.
///
/// A branch with (numerically) zero probability carries no conditional
/// state and is reported as [`Error::DegenerateBranch`].
pub fn collapse_on_first_detection(
    state: &TwoPhotonState,
    a: AnalyzerOrientation,
    channel: Channel,
) -> Result<(f64, SinglePhotonState)> {
    let s = a.channel_state(channel);
    let proj = [s.amp_h.conj(), s.amp_v.conj()];
    let mut partner = [Complex64::new(0.0, 0.0); 2];
    for i2 in 0..2 {
        partner[i2] = proj[0] * state.amps[idx(0, i2)] + proj[1] * state.amps[idx(1, i2)];
    }
    let probability = partner[0].norm_sqr() + partner[1].norm_sqr();
    if probability <= NORM_TOL {
        return Err(Error::DegenerateBranch { probability });
    }
    let inv = probability.sqrt().recip();
    Ok((
        probability,
        SinglePhotonState {
            amp_h: partner[0] * inv,
            amp_v: partner[1] * inv,
        },
    ))
}

/// Computational-basis state over 1..=3 qubits, amplitudes indexed by the
/// bitstring b0 b1 ... with qubit 0 as the most significant bit.
#[derive(Debug, Clone, PartialEq)]
pub struct NQubitState {
    n: usize,
    amps: Vec<Complex64>,
}

impl NQubitState {
    pub fn new(n: usize, amps: Vec<Complex64>) -> Result<Self> {
        if !(1..=3).contains(&n) {
            return Err(Error::UnsupportedQubitCount { n });
        }
        if amps.len() != 1 << n {
            return Err(Error::NotNormalized { norm_sq: f64::NAN });
        }
        let mut norm_sq = 0.0;
        for &a in &amps {
            if !finite(a) {
                return Err(Error::NonFiniteAmplitude);
            }
            norm_sq += a.norm_sqr();
        }
        if (norm_sq - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm_sq });
        }
        Ok(Self { n, amps })
    }

    pub fn qubits(&self) -> usize {
        self.n
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Born probability of measuring `outcome` on `qubit` (0-based).
    pub fn outcome_probability(&self, qubit: usize, outcome: u8) -> Result<f64> {
        if qubit >= self.n {
            return Err(Error::QubitIndexOutOfRange {
                index: qubit,
                n: self.n,
            });
        }
        let bit = self.n - 1 - qubit;
        let mut p = 0.0;
        for (i, a) in self.amps.iter().enumerate() {
            if ((i >> bit) & 1) as u8 == outcome {
                p += a.norm_sqr();
            }
        }
        Ok(p)
    }

    /// Conditional state after measuring `outcome` on `qubit`.
    pub fn collapsed(&self, qubit: usize, outcome: u8) -> Result<NQubitState> {
        let p = self.outcome_probability(qubit, outcome)?;
        if p <= NORM_TOL {
            return Err(Error::DegenerateBranch { probability: p });
        }
        let bit = self.n - 1 - qubit;
        let inv = p.sqrt().recip();
        let amps = self
            .amps
            .iter()
            .enumerate()
            .map(|(i, &a)| {
                if ((i >> bit) & 1) as u8 == outcome {
                    a * inv
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        Ok(NQubitState { n: self.n, amps })
    }
}

/// The three-qubit state `(|000> + |111>) / sqrt(2)`.
pub fn ghz_state() -> NQubitState {
    let mut amps = vec![Complex64::new(0.0, 0.0); 8];
    amps[0] = real(FRAC_1_SQRT_2);
    amps[7] = real(FRAC_1_SQRT_2);
    NQubitState { n: 3, amps }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const PI: f64 = std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    /// Independent Born-rule oracle: explicit four-term projection written
    /// with its own trigonometry, no library state types.
    fn born_joint(amps: &[Complex64; 4], a: f64, ch1: Channel, b: f64, ch2: Channel) -> f64 {
        let ang1 = match ch1 {
            Channel::Transmission => a,
            Channel::Reflection => a + PI / 2.0,
        };
        let ang2 = match ch2 {
            Channel::Transmission => b,
            Channel::Reflection => b + PI / 2.0,
        };
        let p1 = [ang1.cos(), ang1.sin()];
        let p2 = [ang2.cos(), ang2.sin()];
        let mut amp = Complex64::new(0.0, 0.0);
        for i1 in 0..2 {
            for i2 in 0..2 {
                amp += c(p1[i1]) * c(p2[i2]) * amps[2 * i1 + i2];
            }
        }
        amp.norm_sqr()
    }

    fn ao(radians: f64) -> AnalyzerOrientation {
        AnalyzerOrientation::from_radians(radians)
    }

    #[test]
    fn singlet_amplitudes_and_norm() {
        let s = singlet();
        assert!((s.norm_sq() - 1.0).abs() <= NORM_TOL);
        assert_eq!(s.amps()[0], c(0.0));
        assert_eq!(s.amps()[3], c(0.0));
        assert!((s.amps()[1] - c(-FRAC_1_SQRT_2)).norm() <= NORM_TOL);
        assert!((s.amps()[2] - c(FRAC_1_SQRT_2)).norm() <= NORM_TOL);
    }

    #[test]
    fn singlet_equal_angles_never_coincide() {
        let s = singlet();
        let p = joint_probability(&s, ao(0.0), Channel::Transmission, ao(0.0), Channel::Transmission);
        assert!(p.abs() <= NORM_TOL);
    }

    #[test]
    fn joint_probability_matches_half_sine_squared() {
        // 1e-12 closed-form cases, each cross-checked by the projection oracle.
        let s = singlet();
        let cases = [
            (0.0, PI / 2.0, 0.5),
            (0.0, PI / 6.0, 0.125),
        ];
        for (a, b, expected) in cases {
            let p = joint_probability(&s, ao(a), Channel::Transmission, ao(b), Channel::Transmission);
            assert!((p - expected).abs() <= NORM_TOL, "p = {p}, expected {expected}");
            let oracle = born_joint(s.amps(), a, Channel::Transmission, b, Channel::Transmission);
            assert!((p - oracle).abs() <= NORM_TOL);
        }
    }

    #[test]
    fn half_wave_plate_swaps_h_and_v() {
        let hwp = make_element(OpticalElement::HalfWavePlate { theta: PI / 4.0 }).unwrap();
        let out = hwp.apply(SinglePhotonState::horizontal());
        assert!(out.coincides_up_to_phase(SinglePhotonState::vertical()));
        let out = hwp.apply(SinglePhotonState::vertical());
        assert!(out.coincides_up_to_phase(SinglePhotonState::horizontal()));
    }

    #[test]
    fn half_wave_plate_on_photon_one_turns_singlet_into_hh_minus_vv() {
        let hwp = make_element(OpticalElement::HalfWavePlate { theta: PI / 4.0 }).unwrap();
        let out = apply_jones_to_photon(&singlet(), PhotonIndex::One, &hwp);
        let expected = [c(FRAC_1_SQRT_2), c(0.0), c(0.0), c(-FRAC_1_SQRT_2)];
        for (got, want) in out.amps().iter().zip(expected.iter()) {
            assert!((got - want).norm() <= NORM_TOL, "{got} vs {want}");
        }
    }

    #[test]
    fn hwp_fixes_own_axis_and_negates_orthogonal() {
        let theta = 0.37;
        let hwp = make_element(OpticalElement::HalfWavePlate { theta }).unwrap();
        let along = SinglePhotonState::linear(theta);
        let out = hwp.apply(along);
        assert!((out.inner(along).re - 1.0).abs() <= 1e-12);
        let across = SinglePhotonState::linear(theta + PI / 2.0);
        let out = hwp.apply(across);
        assert!((out.inner(across).re + 1.0).abs() <= 1e-12);
    }

    #[test]
    fn rotator_shifts_linear_states() {
        let rot = make_element(OpticalElement::Rotator { theta: PI / 4.0 }).unwrap();
        let out = rot.apply(SinglePhotonState::linear(0.0));
        let p = out.channel_probability(ao(PI / 4.0), Channel::Transmission);
        assert!((p - 1.0).abs() <= NORM_TOL);
    }

    #[test]
    fn rotator_composed_with_inverse_is_identity() {
        let theta = 1.234;
        let r = make_element(OpticalElement::Rotator { theta }).unwrap();
        let rinv = make_element(OpticalElement::Rotator { theta: -theta }).unwrap();
        assert!(r.compose(&rinv).is_identity());
    }

    #[test]
    fn identity_application_is_a_noop() {
        let s = singlet();
        let out = apply_jones_to_photon(&s, PhotonIndex::One, &JonesOperator::identity());
        for (got, want) in out.amps().iter().zip(s.amps().iter()) {
            assert_eq!(got, want);
        }
    }

    #[test]
    fn rotator_on_photon_two_shifts_the_correlation_angle() {
        // Rotating photon 2's state by +theta is the same as rotating its
        // analyzer by -theta, so the joint T/T probability becomes
        // sin^2(b - theta - a) / 2: the amplitude is
        // (sin(a) cos(theta - b) - cos(a) cos(theta + pi/2 - b)) / sqrt(2)
        // = sin(a + theta - b) / sqrt(2). Cross-checked against the
        // brute-force projection oracle on the evolved state.
        let theta = 0.61;
        let rot = make_element(OpticalElement::Rotator { theta }).unwrap();
        let evolved = apply_jones_to_photon(&singlet(), PhotonIndex::Two, &rot);
        for (a, b) in [(0.2, 1.0), (0.9, 0.3), (1.4, 2.8)] {
            let p = joint_probability(&evolved, ao(a), Channel::Transmission, ao(b), Channel::Transmission);
            let closed = 0.5 * (b - theta - a).sin().powi(2);
            assert!((p - closed).abs() <= NORM_TOL);
            let oracle = born_joint(evolved.amps(), a, Channel::Transmission, b, Channel::Transmission);
            assert!((p - oracle).abs() <= NORM_TOL);
        }
    }

    #[test]
    fn non_unitary_matrix_is_rejected() {
        let err = JonesOperator::new([[c(1.0), c(0.0)], [c(0.0), c(2.0)]]).unwrap_err();
        assert!(matches!(err, Error::NonUnitary { .. }));
        let err = make_element(OpticalElement::Custom {
            m: [[c(0.5), c(0.0)], [c(0.0), c(0.5)]],
        })
        .unwrap_err();
        assert!(matches!(err, Error::NonUnitary { .. }));
    }

    #[test]
    fn collapse_of_singlet_gives_orthogonal_partner() {
        let s = singlet();
        for a in [0.0, 0.3, 1.1, 2.9] {
            let (p, partner) = collapse_on_first_detection(&s, ao(a), Channel::Transmission).unwrap();
            assert!((p - 0.5).abs() <= NORM_TOL);
            assert!(partner.coincides_up_to_phase(SinglePhotonState::linear(a + PI / 2.0)));
            let (p, partner) = collapse_on_first_detection(&s, ao(a), Channel::Reflection).unwrap();
            assert!((p - 0.5).abs() <= NORM_TOL);
            assert!(partner.coincides_up_to_phase(SinglePhotonState::linear(a)));
        }
    }

    #[test]
    fn collapse_of_product_state_is_certain() {
        let hh = TwoPhotonState::product(SinglePhotonState::horizontal(), SinglePhotonState::horizontal());
        let (p, partner) = collapse_on_first_detection(&hh, ao(0.0), Channel::Transmission).unwrap();
        assert!((p - 1.0).abs() <= NORM_TOL);
        assert!(partner.coincides_up_to_phase(SinglePhotonState::horizontal()));
    }

    #[test]
    fn collapse_on_zero_probability_branch_is_degenerate() {
        let hh = TwoPhotonState::product(SinglePhotonState::horizontal(), SinglePhotonState::horizontal());
        let err = collapse_on_first_detection(&hh, ao(0.0), Channel::Reflection).unwrap_err();
        assert!(matches!(err, Error::DegenerateBranch { .. }));
    }

    #[test]
    fn ghz_state_has_expected_structure() {
        let g = ghz_state();
        assert!((g.norm_sq() - 1.0).abs() <= NORM_TOL);
        assert!((g.outcome_probability(0, 0).unwrap() - 0.5).abs() <= NORM_TOL);
        let collapsed = g.collapsed(0, 0).unwrap();
        // All weight on |000>.
        assert!((collapsed.amps()[0].norm_sqr() - 1.0).abs() <= NORM_TOL);
        assert!((collapsed.outcome_probability(1, 0).unwrap() - 1.0).abs() <= NORM_TOL);
        assert!((collapsed.outcome_probability(2, 0).unwrap() - 1.0).abs() <= NORM_TOL);
    }

    #[test]
    fn ghz_collapse_on_one_forces_ones() {
        let g = ghz_state();
        let collapsed = g.collapsed(0, 1).unwrap();
        assert!((collapsed.amps()[7].norm_sqr() - 1.0).abs() <= NORM_TOL);
    }

    #[test]
    fn analyzer_orientation_canonical_range() {
        assert!((ao(PI + 0.25).radians() - 0.25).abs() <= 1e-12);
        assert!((ao(-0.25).radians() - (PI - 0.25)).abs() <= 1e-12);
        assert_eq!(ao(0.0).radians(), 0.0);
    }

    fn angle_strategy() -> impl Strategy<Value = f64> {
        -10.0..10.0f64
    }

    fn element_strategy() -> impl Strategy<Value = OpticalElement> {
        prop_oneof![
            angle_strategy().prop_map(|theta| OpticalElement::HalfWavePlate { theta }),
            angle_strategy().prop_map(|theta| OpticalElement::Rotator { theta }),
            angle_strategy().prop_map(|theta| OpticalElement::PockelsRotator { theta }),
        ]
    }

    proptest! {
        #[test]
        fn unitary_sequences_preserve_norm(elements in prop::collection::vec(element_strategy(), 0..6)) {
            let mut state = singlet();
            for (i, e) in elements.iter().enumerate() {
                let u = make_element(*e).unwrap();
                let photon = if i % 2 == 0 { PhotonIndex::One } else { PhotonIndex::Two };
                state = apply_jones_to_photon(&state, photon, &u);
            }
            prop_assert!((state.norm_sq() - 1.0).abs() <= NORM_TOL);
        }

        #[test]
        fn four_channel_combinations_sum_to_one(a in angle_strategy(), b in angle_strategy(), e in element_strategy()) {
            let u = make_element(e).unwrap();
            let state = apply_jones_to_photon(&singlet(), PhotonIndex::One, &u);
            let mut total = 0.0;
            for ch1 in [Channel::Transmission, Channel::Reflection] {
                for ch2 in [Channel::Transmission, Channel::Reflection] {
                    total += joint_probability(&state, ao(a), ch1, ao(b), ch2);
                }
            }
            prop_assert!((total - 1.0).abs() <= NORM_TOL);
        }

        #[test]
        fn singlet_closed_form_holds(a in angle_strategy(), b in angle_strategy()) {
            let s = singlet();
            let tt = joint_probability(&s, ao(a), Channel::Transmission, ao(b), Channel::Transmission);
            let tr = joint_probability(&s, ao(a), Channel::Transmission, ao(b), Channel::Reflection);
            prop_assert!((tt - 0.5 * (b - a).sin().powi(2)).abs() <= NORM_TOL);
            prop_assert!((tr - 0.5 * (b - a).cos().powi(2)).abs() <= NORM_TOL);
        }

        #[test]
        fn singlet_is_rotationally_covariant(a in angle_strategy(), b in angle_strategy(), delta in angle_strategy()) {
            let s = singlet();
            for ch1 in [Channel::Transmission, Channel::Reflection] {
                for ch2 in [Channel::Transmission, Channel::Reflection] {
                    let p = joint_probability(&s, ao(a), ch1, ao(b), ch2);
                    let q = joint_probability(&s, ao(a + delta), ch1, ao(b + delta), ch2);
                    prop_assert!((p - q).abs() <= NORM_TOL);
                }
            }
        }

        #[test]
        fn collapse_satisfies_total_probability(a in angle_strategy(), b in angle_strategy(), e in element_strategy()) {
            let u = make_element(e).unwrap();
            let state = apply_jones_to_photon(&singlet(), PhotonIndex::One, &u);
            for ch1 in [Channel::Transmission, Channel::Reflection] {
                let (p1, partner) = collapse_on_first_detection(&state, ao(a), ch1).unwrap();
                for ch2 in [Channel::Transmission, Channel::Reflection] {
                    let joint = joint_probability(&state, ao(a), ch1, ao(b), ch2);
                    let conditional = partner.channel_probability(ao(b), ch2);
                    prop_assert!((joint - p1 * conditional).abs() <= NORM_TOL);
                }
            }
        }

        #[test]
        fn marginal_equals_sum_of_joints(a in angle_strategy(), b in angle_strategy(), e in element_strategy()) {
            let u = make_element(e).unwrap();
            let state = apply_jones_to_photon(&singlet(), PhotonIndex::Two, &u);
            let m = marginal_probability(&state, PhotonIndex::One, ao(a), Channel::Transmission);
            let joints = joint_probability(&state, ao(a), Channel::Transmission, ao(b), Channel::Transmission)
                + joint_probability(&state, ao(a), Channel::Transmission, ao(b), Channel::Reflection);
            prop_assert!((m - joints).abs() <= NORM_TOL);
        }
    }
}
