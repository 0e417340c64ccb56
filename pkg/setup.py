#!/usr/bin/env python
from setuptools import setup
import re
import os


name = 'ratekit'


def get_version():
    fn = os.path.join(os.path.dirname(__file__), name, '__init__.py')
    with open(fn) as f:
        return re.findall(r"__version__ = '([\d\.\w]+)'", f.read())[0]


setup(
    name=name,
    version=get_version(),
    license='MIT license',
    long_description=open('README.rst').read(),
    description='Large deviations rate functions and their strict convexity',
    packages=[name],
    package_data={name: ['fixtures/*.json']},
    zip_safe=False,
    include_package_data=True,
    python_requires='>=3.8',
    install_requires=[
        'numpy',
        'scipy',
        'joblib',
        'tqdm',
        'pycddlib>=2.1,<3',
    ],
    extras_require={
        'test': ['pytest', 'hypothesis'],
    },
    entry_points={
        'console_scripts': [
            'ratekit=ratekit.cli:main',
        ],
    },
    classifiers=[
        'Development Status :: 3 - Alpha',
        'License :: OSI Approved :: MIT License',
        'Intended Audience :: Science/Research',
        'Operating System :: OS Independent',
        'Programming Language :: Python',
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.8',
        'Topic :: Scientific/Engineering :: Mathematics',
    ],
)
