import setuptools

setuptools.setup(
    name="FractionalPIDDesign",
    version="0.1.0",
    author="Mitchell Dawson",
    description="Fractional-order PID controller design by dominant pole placement",
    packages=setuptools.find_packages(),
    python_requires=">=3.9",
    install_requires=["numpy", "pandas", "tqdm"],
    extras_require={"tests": ["pytest"]},
    entry_points={"console_scripts": ["fopid = src.fopid.cli:main"]},
)
