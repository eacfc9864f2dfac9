from .adapters import ByteLMTask, SpikeAddingTask
from .byte_corpus import (ByteCorpus, load_byte_corpus, save_corpus_manifest,
                          stream_windows, synthetic_text, window_batch)
from .spike_adding import (SpikeAddingSpec, class_rate_profile,
                           gen_spike_adding, nearest_centroid_accuracy)
from .teacher import (TeacherSpec, TeacherStudentData, gen_teacher_student,
                      make_neuron, student_mse, train_student)

__all__ = [
    "ByteLMTask", "SpikeAddingTask", "ByteCorpus", "load_byte_corpus",
    "save_corpus_manifest", "stream_windows", "synthetic_text",
    "window_batch", "SpikeAddingSpec", "class_rate_profile",
    "gen_spike_adding", "nearest_centroid_accuracy", "TeacherSpec",
    "TeacherStudentData", "gen_teacher_student", "make_neuron",
    "student_mse", "train_student",
]
