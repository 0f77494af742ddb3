import os
from glob import glob
from setuptools import setup

package_name = 'xlstm_scaling'

setup(
    name=package_name,
    version='0.1.0',
    packages=[package_name],
    package_data={package_name: ['data/*.json']},
    data_files=[
        (os.path.join('share', package_name), glob(os.path.join(package_name, 'data', '*.json'))),
        (os.path.join('share', package_name, 'doc'), glob('doc/*.md')),
    ],
    python_requires='>=3.10',
    install_requires=['setuptools', 'numpy', 'scipy', 'pandas'],
    zip_safe=True,
    maintainer='xlstm_scaling contributors',
    description='Parameter, FLOP and memory-op accounting, scaling-law fits and roofline '
                'runtime models for Transformer and xLSTM language models',
    license='BSD-3-Clause',
    tests_require=['pytest'],
    entry_points={
        'console_scripts': [
                'xlstm_scaling = xlstm_scaling.cli:main',
        ],
    },
)
