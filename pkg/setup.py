# -*- coding: utf-8 -*-
import codecs
import os
import re
from setuptools import setup, find_packages


def read(*parts):
    filename = os.path.join(os.path.dirname(__file__), *parts)
    with codecs.open(filename, encoding='utf-8') as fp:
        return fp.read()


def find_version(*file_paths):
    version_file = read(*file_paths)
    version_match = re.search(r"^__version__ = ['\"]([^'\"]*)['\"]",
                              version_file, re.M)
    if version_match:
        return version_match.group(1)
    raise RuntimeError("Unable to find version string.")


install_requires = ['numpy>=1.20']

setup(
    name = 'hinet',
    version = find_version('hinet', '__init__.py'),
    description='Hyperdense inception 3D UNet for volumetric segmentation, from tensor kernels up',
    long_description=read('README.rst'),
    packages = find_packages(exclude=['tests', 'itests']),

    install_requires = install_requires,
    python_requires = '>=3.8',
    entry_points = {
        'console_scripts': [
            'hinet = hinet.main:main',
        ],
    },

    tests_require = ['mock'],
    test_suite = 'tests',
    license = 'BSD',
    classifiers = [
        'Development Status :: 3 - Alpha',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: BSD License',
        'Operating System :: OS Independent',
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
        'Programming Language :: Python :: 3.11',
        'Topic :: Scientific/Engineering :: Medical Science Apps.',
    ],
)
