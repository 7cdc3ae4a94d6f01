import setuptools

with open("README.md") as f:
    readme = f.read()

with open("requirements.txt") as f:
    requirements = [line.strip() for line in f if line.strip()]

setuptools.setup(
    name="egogaze",
    version="0.1.0",
    description="Compare an actor's egocentric gaze with video viewers' gaze across time shifts.",
    long_description=readme,
    long_description_content_type="text/markdown",
    classifiers=[
        "Programming Language :: Python :: 3",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Topic :: Scientific/Engineering :: Image Recognition",
    ],
    package_dir={"": "src"},
    packages=setuptools.find_packages(where="src"),
    install_requires=requirements,
    entry_points={
        "console_scripts": ["egogaze=egogaze.cli:main"],
    },
    python_requires=">=3.9",
)
