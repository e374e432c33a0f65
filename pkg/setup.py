import setuptools


def get_long_desc():
    with open("README.md", "r") as fh:
        long_description = fh.read()
    return long_description


setuptools.setup(
    name="ep3-tracker",
    version="0.1.0",
    description="Exceptional points, level crossings and encirclement phases of a three-level "
                "non-Hermitian Hamiltonian.",
    long_description=get_long_desc(),
    long_description_content_type="text/markdown",
    packages=setuptools.find_packages(exclude=("examples", "examples.*")),
    install_requires=["numpy>=1.22", "scipy>=1.7", 'tomli>=1.1; python_version < "3.11"'],
    extras_require={"test": ["jsonschema>=4.0"]},
    python_requires='>=3.8',
    include_package_data=True,
    package_data={"ep3_tracker": ["schemas/*.json"]},
    entry_points={
        "console_scripts": ["ep3-tracker=ep3_tracker.cli:main"],
    },
    classifiers=[
        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
        'Programming Language :: Python :: 3.11',
        'Programming Language :: Python :: 3.12',
        'Topic :: Scientific/Engineering :: Physics',
        "Operating System :: OS Independent",
    ],
)
