import itertools

import numpy as np
import pytest

from imucal import quaternion as quat
from imucal import synth
from imucal.model import STANDARD_GRAVITY


def test_icosahedron_has_twenty_unit_normals():
    n = synth.icosahedron_normals()
    assert n.shape == (20, 3)
    np.testing.assert_allclose(np.linalg.norm(n, axis=1), 1.0)
    assert len({tuple(np.round(v, 9)) for v in n}) == 20


def test_minimum_face_separation():
    n = synth.icosahedron_normals()
    ang = [np.degrees(np.arccos(np.clip(a @ b, -1, 1))) for a, b in itertools.combinations(n, 2)]
    # adjacent faces: the dihedral supplement, arccos(sqrt(5)/3)
    assert min(ang) == pytest.approx(np.degrees(np.arccos(np.sqrt(5) / 3)), abs=1e-9)
    assert min(ang) >= 41.5


def test_die_numbering():
    n = synth.icosahedron_normals()
    for i in range(10):
        np.testing.assert_allclose(n[i], -n[19 - i], atol=1e-12)
    step = np.degrees(np.arccos(np.sum(n[:-1] * n[1:], axis=1)))
    assert step[9] == pytest.approx(180.0)
    np.testing.assert_allclose(np.delete(step, 9), np.degrees(np.arccos(-np.sqrt(5) / 3)), atol=1e-9)


def test_orientations_put_faces_up():
    for q, nrm in zip(synth.icosahedron_orientations(), synth.icosahedron_normals()):
        np.testing.assert_allclose(quat.rotate(q, nrm), [0, 0, 1], atol=1e-12)


def test_flat_identity_reads_gravity_on_z():
    truth = synth.GroundTruth().noiseless()
    sched = synth.OrientationSchedule([quat.IDENTITY], [2.0], initial_hold=0.0)
    s = synth.generate(sched, truth)
    np.testing.assert_allclose(s.accel, np.tile([0, 0, STANDARD_GRAVITY], (len(s), 1)), atol=1e-12)
    np.testing.assert_array_equal(s.gyro, 0.0)


def test_specific_force_has_gravity_norm():
    s = synth.make_protocol_sequence(12, synth.GroundTruth().noiseless(), seed=5)
    np.testing.assert_allclose(np.linalg.norm(s.accel, axis=1), STANDARD_GRAVITY, rtol=1e-12)


def test_transitions_integrate_to_the_next_pose():
    s = synth.make_protocol_sequence(12, synth.GroundTruth().noiseless(), seed=5)
    att, rates = s.metadata["true_attitudes"], s.metadata["true_rates"]
    ranges = s.metadata["static_ranges"]
    for (_, a), (b, _) in zip(ranges[:-1], ranges[1:]):
        rel = quat.integrate_rates(rates[a:b], s.dt)
        target = quat.multiply(quat.conjugate(att[a - 1]), att[b])
        assert quat.angle_between(rel, target) < 1e-6


def test_rates_stay_in_gyro_range():
    s = synth.make_protocol_sequence(37, synth.GroundTruth().noiseless(), seed=5)
    assert np.abs(s.metadata["true_rates"]).max() <= synth.GYRO_FULL_SCALE


def test_protocol_sequence_duration():
    s = synth.make_protocol_sequence(37, synth.GroundTruth(), seed=0)
    assert s.duration == pytest.approx(40 + 3 * 37 + 1.5 * 36)
    assert len(s.metadata["static_ranges"]) == 37


def test_first_twelve_faces_are_distinct():
    faces = synth.protocol_faces(37, seed=9)
    assert faces[:20] == list(range(20))
    assert len(set(faces[:12])) == 12
    assert all(a != b for a, b in zip(faces, faces[1:]))


def test_seed_determinism(truth):
    a = synth.make_protocol_sequence(10, truth, seed=3)
    b = synth.make_protocol_sequence(10, truth, seed=3)
    c = synth.make_protocol_sequence(10, truth, seed=4)
    np.testing.assert_array_equal(a.accel, b.accel)
    np.testing.assert_array_equal(a.gyro, b.gyro)
    assert not np.array_equal(a.accel, c.accel)


def test_noise_levels(truth):
    s = synth.make_protocol_sequence(9, truth, seed=1)
    a, b = s.metadata["static_ranges"][0]
    assert np.std(s.accel[a:b], axis=0) == pytest.approx(np.full(3, synth.ADXL355_NOISE / truth.params.accel.scale), rel=0.05)
    assert np.std(s.gyro[a:b], axis=0) == pytest.approx(np.full(3, synth.BMI160_GYRO_NOISE), rel=0.05)


def test_random_truth_respects_bounds():
    rng = np.random.default_rng(0)
    for _ in range(50):
        p = synth.random_truth(rng).params
        assert np.all(np.abs(p.accel.scale - 1) <= 0.02)
        assert np.all(np.abs(np.degrees(p.gyro.misalignment)) <= 1)
        assert np.all(np.abs(p.accel.bias) <= 50e-3 * STANDARD_GRAVITY)
        assert np.all(np.abs(p.gyro.bias) <= 0.02)


def test_perturbation_only_on_later_holds():
    truth = synth.GroundTruth().noiseless()
    s = synth.make_protocol_sequence(9, truth, seed=0, perturbation=synth.Perturbation())
    ranges = s.metadata["static_ranges"]
    a, b = ranges[0]
    np.testing.assert_allclose(np.linalg.norm(s.accel[a:b], axis=1), STANDARD_GRAVITY)
    a, b = ranges[3]
    assert np.std(np.linalg.norm(s.accel[a:b], axis=1)) > 0.01
