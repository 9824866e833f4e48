# -*- coding: utf-8 -*-
BACKGROUND = 0
NECROTIC = 1
EDEMA = 2
ENHANCING = 4

# channel order of one-hot targets and network outputs
LABEL_CODES = (BACKGROUND, NECROTIC, EDEMA, ENHANCING)

LabelCode = (
    (BACKGROUND, 'Background and healthy tissue.'),
    (NECROTIC, 'Necrotic and non-enhancing tumor core.'),
    (EDEMA, 'Peritumoral edema.'),
    (ENHANCING, 'GD-enhancing tumor.'),
)

WT = 'WT'
TC = 'TC'
ET = 'ET'

# nested evaluation regions, outermost first
Region = (
    (WT, frozenset([NECROTIC, EDEMA, ENHANCING])),
    (TC, frozenset([NECROTIC, ENHANCING])),
    (ET, frozenset([ENHANCING])),
)

AXIAL = 'axial'
CORONAL = 'coronal'
SAGITTAL = 'sagittal'

# kernel extents over (z, y, x); assembly order of the branches
ViewAxis = (
    (AXIAL, (1, 3, 3)),
    (CORONAL, (3, 1, 3)),
    (SAGITTAL, (3, 3, 1)),
)

HYPERDENSE = 'hyperdense'
BASELINE = 'baseline'

BlockVariant = (
    (HYPERDENSE, 'Stage-2 branches see every stage-1 view.'),
    (BASELINE, 'Stage-2 branches see only their own stage-1 view.'),
)

TRAIN32 = 'train32'
CHECK64 = 'check64'

Mode = (
    (TRAIN32, 'float32'),
    (CHECK64, 'float64'),
)

EXIT_OK = 0
EXIT_VERIFICATION_FAILED = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3

ExitCode = (
    (EXIT_OK, 'Command finished successfully.'),
    (EXIT_VERIFICATION_FAILED, 'A verification threshold was exceeded.'),
    (EXIT_USAGE, 'Invalid configuration, arguments or input files.'),
    (EXIT_NUMERICAL, 'Training aborted on a non-finite value.'),
)
