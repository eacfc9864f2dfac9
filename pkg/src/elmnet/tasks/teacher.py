"""Teacher-student regression: fit small neurons to the memory-readout
trace of a frozen larger neuron driven by random spike trains.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core.config import NeuronConfig
from ..core.layer import init_layer_params, layer_step, zero_layer_state
from ..core.neuron import count_params
from ..core.wiring import init_feedforward_wiring
from ..errors import InvalidConfigError
from ..training.backprop import _layer_backward_step
from ..training.optim import OptimConfig, OptimizerState, optimizer_step


@dataclass(frozen=True)
class TeacherSpec:
    teacher: NeuronConfig
    input_channels: int = 32
    input_rate: float = 0.15
    sample_length: int = 120
    burn_in: int = 20
    teacher_seed: int = 0

    def validate(self) -> "TeacherSpec":
        self.teacher.validate()
        if not (0.0 < self.input_rate < 1.0):
            raise InvalidConfigError(f"input_rate must be in (0,1), got {self.input_rate}")
        if not (0 <= self.burn_in < self.sample_length):
            raise InvalidConfigError("burn_in must be < sample_length")
        return self


@dataclass
class SingleNeuron:
    """One neuron wrapped as a 1-row layer with feed-forward wiring."""

    config: NeuronConfig
    wiring: object
    params: object

    def forward(self, inputs: np.ndarray, want_internals: bool = False):
        """inputs (batch, T, channels) -> readout trace v (batch, T) and the
        activity a (batch, T); optionally the per-step internals."""
        batch, T, _ = inputs.shape
        state = zero_layer_state(1, self.config.d_m, batch)
        a_prev = np.zeros((batch, 1))
        v = np.zeros((batch, T))
        a = np.zeros((batch, T))
        steps = []
        for t in range(T):
            out = layer_step(state, inputs[:, t], a_prev, self.wiring,
                             self.params, self.config,
                             want_internals=want_internals)
            if want_internals:
                new_state, a_t, info = out
                steps.append((state.m, new_state.m, info))
            else:
                new_state, a_t = out
            state = new_state
            v[:, t] = info["v"][:, 0] if want_internals else np.einsum(
                "bnj,nj->bn", state.m, self.params.w_r)[:, 0]
            a[:, t] = a_t[:, 0]
        if want_internals:
            return v, a, steps
        return v, a


def make_neuron(config: NeuronConfig, input_channels: int, seed) -> SingleNeuron:
    rng = np.random.default_rng(seed)
    wiring = init_feedforward_wiring(1, input_channels, config.d_s, rng)
    params = init_layer_params(config, 1, rng)
    return SingleNeuron(config=config, wiring=wiring, params=params)


@dataclass
class TeacherStudentData:
    inputs: np.ndarray           # (n, T, channels) shared across students
    targets: np.ndarray          # (n, T) teacher memory-readout traces
    burn_in: int
    student_configs: list = field(default_factory=list)
    student_k_e: list = field(default_factory=list)


def gen_teacher_student(spec: TeacherSpec, n_samples: int, student_configs,
                        seed: int = 0) -> TeacherStudentData:
    """Shared random spike inputs plus the frozen teacher's readout traces.

    Student configs should span at least a decade in k_e for scaling fits.
    """
    spec.validate()
    rng = np.random.default_rng(seed)
    inputs = (rng.random((n_samples, spec.sample_length, spec.input_channels))
              < spec.input_rate).astype(float)
    teacher = make_neuron(spec.teacher, spec.input_channels, spec.teacher_seed)
    targets, _ = teacher.forward(inputs)
    k_es = [count_params(cfg)[0] for cfg in student_configs]
    return TeacherStudentData(inputs=inputs, targets=targets,
                              burn_in=spec.burn_in,
                              student_configs=list(student_configs),
                              student_k_e=k_es)


def student_mse(student: SingleNeuron, inputs, targets, burn_in: int) -> float:
    v, a = student.forward(inputs)
    diff = (a - targets)[:, burn_in:]
    return float(np.mean(diff ** 2))


def train_student(config: NeuronConfig, data: TeacherStudentData, seed: int = 0,
                  steps: int = 300, batch_size: int = 16,
                  lr: float = 1e-2, train_frac: float = 0.8):
    """Fit one student by gradient descent on the post-burn-in MSE.

    The student predicts through its linear output (a = b + w_r.m), so its
    trace can match the teacher's readout directly. Returns
    (student, train_mse, test_mse).
    """
    config = config.validate()
    if config.output_mode != "linear-no-filter":
        raise InvalidConfigError("students must use linear-no-filter output")
    n = data.inputs.shape[0]
    n_train = int(n * train_frac)
    student = make_neuron(config, data.inputs.shape[2], seed)
    opt = OptimConfig(algorithm="adam", lr=lr, warmup_steps=0,
                      total_steps=steps, clip_norm=1.0).validate()
    opt_state = OptimizerState()
    rng = np.random.default_rng(seed + 1)

    grads = student.params.zeros_like()
    for _ in range(steps):
        idx = rng.integers(0, n_train, size=batch_size)
        x = data.inputs[idx]
        y = data.targets[idx]
        batch, T, _ = x.shape

        state = zero_layer_state(1, config.d_m, batch)
        a_prev = np.zeros((batch, 1))
        m_stack = [state.m]
        infos = []
        a_all = np.zeros((batch, T))
        for t in range(T):
            state, a_t, info = layer_step(state, x[:, t], a_prev,
                                          student.wiring, student.params,
                                          config, want_internals=True)
            m_stack.append(state.m)
            infos.append(info)
            a_all[:, t] = a_t[:, 0]

        count = batch * (T - data.burn_in)
        for name, arr in grads.named_tensors():
            arr[...] = 0.0
        gm = np.zeros((batch, 1, config.d_m))
        gr = np.zeros((batch, 1))
        for t in range(T - 1, -1, -1):
            if t >= data.burn_in:
                ga = (2.0 * (a_all[:, t] - y[:, t]) / count)[:, None]
            else:
                ga = np.zeros((batch, 1))
            _, gm, gr = _layer_backward_step(
                ga, m_stack[t], m_stack[t + 1], infos[t], None,
                student.params, config, grads, gm, gr)

        optimizer_step(dict(student.params.named_tensors()),
                       dict(grads.named_tensors()), opt_state, opt)

    train_mse = student_mse(student, data.inputs[:n_train],
                            data.targets[:n_train], data.burn_in)
    test_mse = student_mse(student, data.inputs[n_train:],
                           data.targets[n_train:], data.burn_in)
    return student, train_mse, test_mse
