import math
import random

import pytest

from evoswim.genome import (
    DimensionSpec,
    Genotype,
    ParameterSpace,
    SpaceExhaustedError,
    build_default_space,
    quantize,
)
from evoswim.pso import (
    Particle,
    PsoConfig,
    PsoEngine,
    SwarmState,
    gbest_reset_velocity,
    next_generation,
    position_update,
    register_fitness,
    velocity_update,
)

def spans(space):
    return [d.span for d in space.dimensions]


def particle_at(space, raw, velocity=None):
    position = list(raw)
    return Particle(position=position,
                    velocity=list(velocity) if velocity else [0.0] * len(position),
                    pbest_position=list(position), pbest_fitness=-math.inf,
                    genotype=quantize(space, position))


def small_space(counts=(4, 4)):
    return ParameterSpace(dimensions=tuple(
        DimensionSpec(f"d{i}", "", tuple(float(v) for v in range(c)))
        for i, c in enumerate(counts)))


class TestPsoConfig:
    def test_experimental_defaults(self):
        config = PsoConfig()
        assert (config.w, config.c1, config.c2) == (0.0, 0.2, 1.4)
        assert config.swarm == 8 and config.max_dedup_steps == 5

    def test_validation(self):
        with pytest.raises(ValueError):
            PsoConfig(swarm=1)
        with pytest.raises(ValueError):
            PsoConfig(w=float("inf"))
        with pytest.raises(ValueError):
            PsoConfig(max_dedup_steps=-1)


class TestVelocityUpdate:
    def test_converged_particle_is_still(self):
        space = build_default_space()
        raw = (2.0, 1.0, 30.0, 50.0, 12.0, 2.0, 1.0, 1.0)
        p = particle_at(space, raw)
        v = velocity_update(p, list(raw), PsoConfig(w=0.0, c1=0.5, c2=0.5),
                            space, random.Random(0))
        assert v == [0.0] * 8

    def test_pure_inertia_keeps_velocity(self):
        space = build_default_space()
        p = particle_at(space, (2.0, 1.0, 30.0, 50.0, 12.0, 2.0, 1.0, 1.0),
                        velocity=(0.1, -0.2, 5.0, 1.0, -1.0, 0.5, 0.2, 0.1))
        v = velocity_update(p, list(p.position), PsoConfig(w=1.0, c1=0.0, c2=0.0),
                            space, random.Random(1))
        assert v == pytest.approx(p.velocity)

    def test_clamp_to_dimension_range(self):
        space = build_default_space()
        p = particle_at(space, (2.0, 1.0, 30.0, 50.0, 12.0, 2.0, 1.0, 1.0),
                        velocity=(5.0, -99.0, 400.0, 0.0, 0.0, 0.0, 0.0, 0.0))
        v = velocity_update(p, list(p.position), PsoConfig(w=1.0, c1=0.0, c2=0.0),
                            space, random.Random(2))
        assert v[0] == pytest.approx(2.8)  # laser power range 3.2 - 0.4
        assert v[1] == pytest.approx(-4.9)
        assert v[2] == 165.0

    def test_clamp_always_holds(self):
        space = build_default_space()
        rng = random.Random(3)
        config = PsoConfig(w=3.0, c1=3.0, c2=3.0)
        p = particle_at(space, (0.4, 0.1, 0.0, 50.0, 6.0, 1.0, 0.0, 0.2),
                        velocity=spans(space))
        gbest = [3.2, 5.0, 165.0, 90.0, 18.0, 3.0, 1.0, 1.0]
        for _ in range(200):
            v = velocity_update(p, gbest, config, space, rng)
            for vd, span in zip(v, spans(space)):
                assert abs(vd) <= span
            p.velocity = v


class TestPositionUpdate:
    def test_zero_velocity_is_identity(self):
        space = build_default_space()
        raw = (2.0, 1.0, 30.0, 50.0, 12.0, 2.0, 1.0, 1.0)
        p = particle_at(space, raw)
        position, genotype = position_update(p, [0.0] * 8, space)
        assert position == list(raw)
        assert genotype == p.genotype

    def test_periodic_wrap(self):
        space = build_default_space()
        p = particle_at(space, (0.4, 0.1, 150.0, 50.0, 6.0, 1.0, 0.0, 0.2))
        position, genotype = position_update(
            p, [0.0, 0.0, 45.0, 0.0, 0.0, 0.0, 0.0, 0.0], space)
        assert position[2] == pytest.approx(15.0)
        assert space.values_of(genotype)[2] == 15.0

    def test_clip_then_quantize(self):
        space = build_default_space()
        p = particle_at(space, (0.4, 4.9, 0.0, 50.0, 6.0, 1.0, 0.0, 0.2))
        position, genotype = position_update(
            p, [0.0, 0.4, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0], space)
        assert position[1] == 5.0  # raw 5.3 clipped to the boundary
        assert space.values_of(genotype)[1] == 5.0

    def test_genotype_always_on_grid(self):
        space = build_default_space()
        rng = random.Random(4)
        p = particle_at(space, (2.0, 2.5, 90.0, 70.0, 12.0, 2.0, 0.5, 0.6))
        for _ in range(200):
            v = [rng.uniform(-span, span) for span in spans(space)]
            position, genotype = position_update(p, v, space)
            assert quantize(space, space.values_of(genotype)) == genotype
            p.position = position


class TestGbestResetVelocity:
    def test_shared_scalar_times_ranges(self):
        space = build_default_space()
        v = gbest_reset_velocity(space, random.Random(5))
        u = v[0] / space.dimensions[0].span
        assert -1.0 <= u <= 1.0
        # the per-dimension ranges of the default space
        expected = (2.8, 4.9, 165.0, 40.0, 12.0, 2.0, 1.0, 0.8)
        for vd, span in zip(v, expected):
            assert vd == pytest.approx(u * span, rel=1e-12)

    def test_extreme_scalar_bounds(self):
        space = build_default_space()
        rng = random.Random(6)
        for _ in range(500):
            v = gbest_reset_velocity(space, rng)
            for vd, span in zip(v, spans(space)):
                assert abs(vd) <= span

    def test_components_share_sign(self):
        space = build_default_space()
        rng = random.Random(7)
        for _ in range(100):
            v = gbest_reset_velocity(space, rng)
            signs = {math.copysign(1.0, vd) for vd in v if vd != 0.0}
            assert len(signs) <= 1


class TestRegisterFitness:
    def build_state(self, space):
        particles = [particle_at(space, (0.0, 0.0)), particle_at(space, (1.0, 2.0))]
        return SwarmState(particles=particles,
                          gbest_position=list(particles[0].position),
                          gbest_fitness=-math.inf)

    def test_below_pbest_no_change(self):
        space = small_space()
        state = self.build_state(space)
        register_fitness(state, 0, 5.0, space, random.Random(8))
        before = (list(state.particles[0].pbest_position), state.particles[0].pbest_fitness,
                  state.gbest_fitness)
        register_fitness(state, 0, 1.0, space, random.Random(9))
        after = (list(state.particles[0].pbest_position), state.particles[0].pbest_fitness,
                 state.gbest_fitness)
        assert before == after

    def test_new_global_best_resets_velocity(self):
        space = small_space()
        state = self.build_state(space)
        register_fitness(state, 0, 5.0, space, random.Random(10))
        v = state.particles[0].velocity
        spans = [d.span for d in space.dimensions]
        u = v[0] / spans[0]
        assert v == pytest.approx([u * s for s in spans])
        assert state.gbest_fitness == 5.0
        assert state.gbest_position == state.particles[0].position

    def test_gbest_non_decreasing(self):
        space = small_space()
        state = self.build_state(space)
        rng = random.Random(11)
        best = -math.inf
        for fitness in (3.0, 1.0, 7.0, 2.0, 7.0, 8.0):
            register_fitness(state, rng.randrange(2), fitness, space, rng)
            assert state.gbest_fitness >= best
            best = state.gbest_fitness


class TestNextGeneration:
    def test_never_repeats_history(self):
        space = small_space((4, 4))
        rng = random.Random(12)
        for _ in range(100):
            engine = PsoEngine(space, PsoConfig(swarm=4), random.Random(rng.random()))
            seen: set[Genotype] = set()
            for _ in range(3):
                genotypes = engine.ask()
                assert not set(genotypes) & seen
                engine.tell([rng.random() for _ in genotypes])
                seen.update(genotypes)

    def test_within_generation_duplicates_allowed(self):
        space = small_space((4, 4))
        # two particles with identical state and pure inertia land on one cell
        p1 = particle_at(space, (0.0, 0.0), velocity=(1.0, 1.0))
        p2 = particle_at(space, (0.0, 0.0), velocity=(1.0, 1.0))
        state = SwarmState(particles=[p1, p2], gbest_position=[0.0, 0.0],
                           gbest_fitness=1.0)
        state.evaluated = {Genotype((0, 0))}
        out = next_generation(state, PsoConfig(w=1.0, c1=0.0, c2=0.0, swarm=2),
                              space, random.Random(13))
        assert out[0] == out[1] == Genotype((1, 1))

    def test_stationary_swarm_falls_through_to_mutation(self):
        space = small_space((4, 4))
        stuck = Genotype((2, 2))
        particles = [particle_at(space, (2.0, 2.0)) for _ in range(3)]
        state = SwarmState(particles=particles, gbest_position=[2.0, 2.0],
                           gbest_fitness=1.0, evaluated={stuck})
        out = next_generation(state, PsoConfig(swarm=3), space, random.Random(14))
        assert all(g != stuck for g in out)
        for particle, genotype in zip(state.particles, out):
            assert particle.genotype == genotype
            assert particle.position == list(space.values_of(genotype))

    def test_space_exhausted(self):
        space = small_space((2, 2))
        particles = [particle_at(space, (0.0, 0.0)), particle_at(space, (1.0, 1.0))]
        state = SwarmState(particles=particles, gbest_position=[0.0, 0.0],
                           gbest_fitness=1.0,
                           evaluated={Genotype((a, b)) for a in range(2) for b in range(2)})
        with pytest.raises(SpaceExhaustedError):
            next_generation(state, PsoConfig(swarm=2), space, random.Random(15))

    def test_deterministic(self):
        space = build_default_space()

        def run(seed):
            engine = PsoEngine(space, PsoConfig(), random.Random(seed))
            out = []
            for _ in range(4):
                genotypes = engine.ask()
                engine.tell([float(sum(g.indices)) for g in genotypes])
                out.append(genotypes)
            return out

        assert run(1234) == run(1234)


class TestPsoEngine:
    def test_first_ask_distinct_zero_velocity(self):
        engine = PsoEngine(build_default_space(), PsoConfig(), random.Random(16))
        genotypes = engine.ask()
        assert len(set(genotypes)) == 8
        assert engine.state is not None
        for particle, genotype in zip(engine.state.particles, genotypes):
            assert particle.velocity == [0.0] * 8
            assert particle.genotype == genotype
            assert particle.position == list(engine.space.values_of(genotype))

    def test_first_tell_energizes_gbest(self):
        engine = PsoEngine(build_default_space(), PsoConfig(), random.Random(17))
        engine.ask()
        engine.tell([float(i) for i in range(8)])
        state = engine.state
        assert state.gbest_fitness == 7.0
        assert state.particles[7].velocity != [0.0] * 8
        assert state.gbest_fitness == max(p.pbest_fitness for p in state.particles)

    def test_genotype_invariant_after_updates(self):
        space = build_default_space()
        engine = PsoEngine(space, PsoConfig(), random.Random(18))
        rng = random.Random(19)
        for _ in range(5):
            engine.ask()
            engine.tell([rng.random() * 10 for _ in range(8)])
            for particle in engine.state.particles:
                assert quantize(space, particle.position) == particle.genotype

    def test_protocol_errors(self):
        engine = PsoEngine(build_default_space(), PsoConfig(), random.Random(20))
        with pytest.raises(RuntimeError):
            engine.tell([0.0] * 8)
        engine.ask()
        with pytest.raises(RuntimeError):
            engine.ask()
        with pytest.raises(ValueError):
            engine.tell([0.0])
