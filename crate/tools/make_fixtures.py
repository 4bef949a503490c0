#!/usr/bin/env python3
"""Regenerate the notebook fixtures under fixtures/.

    python3 tools/make_fixtures.py

Output is deterministic; rerunning rewrites identical files.
"""

import base64
import json
import random
import struct
import zlib
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent / "fixtures"


def png(width, height, rgb):
    """A solid-color PNG, base64 encoded the way Jupyter stores it."""
    raw = b"".join(b"\x00" + bytes(rgb) * width for _ in range(height))

    def chunk(tag, data):
        body = tag + data
        return struct.pack(">I", len(data)) + body + struct.pack(">I", zlib.crc32(body) & 0xFFFFFFFF)

    blob = (
        b"\x89PNG\r\n\x1a\n"
        + chunk(b"IHDR", struct.pack(">IIBBBBB", width, height, 8, 2, 0, 0, 0))
        + chunk(b"IDAT", zlib.compress(raw))
        + chunk(b"IEND", b"")
    )
    return base64.b64encode(blob).decode()


def table(header, rows):
    head = "".join(f"<th>{h}</th>" for h in header)
    body = "".join("<tr>" + "".join(f"<td>{c}</td>" for c in r) + "</tr>" for r in rows)
    return f'<div><table border="1" class="dataframe"><thead><tr>{head}</tr></thead><tbody>{body}</tbody></table></div>'


def lines(text):
    parts = text.split("\n")
    return [p + "\n" for p in parts[:-1]] + [parts[-1]]


class Notebook:
    def __init__(self, as_lists=True):
        self.cells = []
        self.count = 0
        self.as_lists = as_lists

    def _src(self, text):
        text = text.strip("\n")
        return lines(text) if self.as_lists else text

    def md(self, text):
        self.cells.append({"cell_type": "markdown", "metadata": {}, "source": self._src(text)})
        return self

    def raw(self, text):
        self.cells.append({"cell_type": "raw", "metadata": {}, "source": self._src(text)})
        return self

    def code(self, text, outputs=()):
        self.count += 1
        outs = []
        for o in outputs:
            o = dict(o)
            if o["output_type"] == "execute_result":
                o["execution_count"] = self.count
            outs.append(o)
        self.cells.append(
            {
                "cell_type": "code",
                "execution_count": self.count,
                "metadata": {},
                "outputs": outs,
                "source": self._src(text),
            }
        )
        return self

    def dump(self, path):
        doc = {
            "cells": self.cells,
            "metadata": {
                "kernelspec": {"display_name": "Python 3", "language": "python", "name": "python3"},
                "language_info": {"name": "python", "version": "3.10.12"},
            },
            "nbformat": 4,
            "nbformat_minor": 5,
        }
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(doc, indent=1) + "\n")


def image(rgb=(70, 110, 170), w=4, h=3):
    return {
        "output_type": "display_data",
        "data": {"image/png": png(w, h, rgb), "text/plain": ["<Figure size 640x480 with 1 Axes>"]},
        "metadata": {},
    }


def html_table(header, rows):
    return {
        "output_type": "execute_result",
        "data": {"text/html": table(header, rows), "text/plain": ["(table)"]},
        "metadata": {},
    }


def text_result(text):
    return {"output_type": "execute_result", "data": {"text/plain": [text]}, "metadata": {}}


def stream(text):
    return {"output_type": "stream", "name": "stdout", "text": [text]}


# ---------------------------------------------------------------------------
# demo notebook: red wine quality, 19 code cells


def wine_quality():
    nb = Notebook()
    nb.md("# Red Wine Quality Prediction\n\nPredicting whether a red wine is good or not from its physicochemical properties.")
    nb.code(
        "import numpy as np\nimport pandas as pd\nimport matplotlib.pyplot as plt\nimport seaborn as sns",
    )
    nb.code(
        "# load the red wine dataset\nwine = pd.read_csv('winequality-red.csv')\nwine.head()",
        [html_table(["fixed acidity", "volatile acidity", "alcohol", "quality"], [["7.4", "0.70", "9.4", "5"], ["7.8", "0.88", "9.8", "5"]])],
    )
    nb.md("## EDA\n\nA first look at the data: summary statistics, distributions and correlations.")
    nb.code("wine.info()", [stream("<class 'pandas.core.frame.DataFrame'>\nRangeIndex: 1599 entries\n")])
    nb.code(
        "# summary statistics of every column\nwine.describe()",
        [html_table(["", "alcohol", "quality"], [["mean", "10.42", "5.64"], ["std", "1.07", "0.81"]])],
    )
    nb.code(
        "# distribution of the quality score\nsns.countplot(x='quality', data=wine)\nplt.show()",
        [image((200, 80, 80))],
    )
    nb.code(
        "# correlation matrix of features as a heatmap\nplt.figure(figsize=(10, 8))\nsns.heatmap(wine.corr(), annot=True, cmap='coolwarm')\nplt.show()",
        [image((90, 60, 160))],
    )
    nb.code(
        "# alcohol against quality\nsns.boxplot(x='quality', y='alcohol', data=wine)\nplt.show()",
        [image((60, 150, 90))],
    )
    nb.md("## Data Preprocessing\n\nCheck for missing values and duplicated rows before modelling.")
    nb.code("# count missing values in each column\nwine.isnull().sum()", [text_result("fixed acidity 0\nalcohol 0\nquality 0")])
    nb.code("# remove duplicated rows\nwine = wine.drop_duplicates()\nwine.shape", [text_result("(1359, 12)")])
    nb.md("## Feature Engineering\n\nTurn the quality score into a binary label and scale the inputs.")
    nb.code(
        "# bin the quality score into good and bad wine\nwine['good'] = (wine['quality'] >= 7).astype(int)\nwine['good'].value_counts()",
        [text_result("0 1175\n1 184")],
    )
    nb.code(
        "from sklearn.preprocessing import StandardScaler\n# scale features with a standard scaler\nscaler = StandardScaler()\nfeatures = wine.drop(['quality', 'good'], axis=1)\nscaled = scaler.fit_transform(features)",
    )
    nb.md("## Models\n\nSplit the data, train a few classifiers and compare them.")
    nb.code(
        "from sklearn.model_selection import train_test_split\n# split the data into a training set and a test set\nX_train, X_test, y_train, y_test = train_test_split(scaled, wine['good'], test_size=0.25, random_state=0)",
    )
    nb.code(
        "from sklearn.ensemble import RandomForestClassifier\n# train a random forest classifier\nmodel = RandomForestClassifier(n_estimators=200, random_state=0)\nmodel.fit(X_train, y_train)",
        [text_result("RandomForestClassifier(n_estimators=200, random_state=0)")],
    )
    nb.code("# predict the labels of the test set\ny_pred = model.predict(X_test)")
    nb.code(
        "from sklearn.metrics import f1_score, accuracy_score\n# compute the F1 score of a model\nf1 = f1_score(y_test, y_pred)\nacc = accuracy_score(y_test, y_pred)\nprint(f1, acc)",
        [stream("0.61 0.90\n")],
    )
    nb.code(
        "from sklearn.metrics import confusion_matrix\n# plot the confusion matrix of the random forest\ncm = confusion_matrix(y_test, y_pred)\nsns.heatmap(cm, annot=True, fmt='d')\nplt.show()",
        [image((230, 180, 40))],
    )
    nb.code(
        "from sklearn.model_selection import cross_val_score\n# cross validation score of the random forest\nscores = cross_val_score(model, scaled, wine['good'], cv=5, scoring='f1')\nscores.mean()",
        [text_result("0.57")],
    )
    nb.code(
        "from sklearn.linear_model import LogisticRegression\n# compare with a logistic regression model\nlogreg = LogisticRegression(max_iter=1000)\nlogreg.fit(X_train, y_train)\nlogreg.score(X_test, y_test)",
        [text_result("0.88")],
    )
    nb.code(
        "# feature importance of the random forest\nimportance = pd.Series(model.feature_importances_, index=features.columns)\nimportance.sort_values().plot(kind='barh')\nplt.show()",
        [image((40, 140, 200))],
    )
    assert sum(c["cell_type"] == "code" for c in nb.cells) == 19
    return nb


# ---------------------------------------------------------------------------
# corpus: varied tabular-ML notebooks

DOMAINS = [
    ("titanic", "train.csv", "Survived", "passengers", ["Age", "Fare", "Pclass", "Sex"], "classifier"),
    ("house_prices", "house_prices.csv", "SalePrice", "houses", ["LotArea", "YearBuilt", "GrLivArea", "Neighborhood"], "regressor"),
    ("iris", "iris.csv", "species", "flowers", ["sepal_length", "sepal_width", "petal_length", "petal_width"], "classifier"),
    ("customer_churn", "telco_churn.csv", "Churn", "customers", ["tenure", "MonthlyCharges", "Contract", "PaymentMethod"], "classifier"),
    ("credit_default", "credit_card_default.xlsx", "default", "clients", ["LIMIT_BAL", "AGE", "PAY_0", "EDUCATION"], "classifier"),
    ("heart_disease", "heart.csv", "target", "patients", ["age", "chol", "thalach", "cp"], "classifier"),
    ("sms_spam", "spam.csv", "label", "messages", ["length", "n_digits", "n_upper", "has_url"], "classifier"),
    ("store_sales", "store_sales.csv", "Weekly_Sales", "stores", ["Temperature", "Fuel_Price", "CPI", "Holiday"], "regressor"),
    ("diabetes", "diabetes.csv", "Outcome", "patients", ["Glucose", "BMI", "Insulin", "Age"], "classifier"),
    ("white_wine", "winequality-white.csv", "quality", "wines", ["alcohol", "density", "residual_sugar", "pH"], "regressor"),
    ("student_performance", "student-mat.csv", "G3", "students", ["studytime", "failures", "absences", "school"], "regressor"),
    ("airbnb_prices", "listings.csv", "price", "listings", ["room_type", "minimum_nights", "number_of_reviews", "neighbourhood"], "regressor"),
    ("bike_sharing", "hour.csv", "cnt", "hours", ["temp", "hum", "windspeed", "season"], "regressor"),
    ("card_fraud", "creditcard.csv", "Class", "transactions", ["Amount", "Time", "V1", "V2"], "classifier"),
    ("movie_reviews", "imdb_reviews.json", "sentiment", "reviews", ["n_words", "n_exclaim", "avg_word_len", "year"], "classifier"),
    ("stroke", "healthcare-dataset-stroke-data.csv", "stroke", "patients", ["age", "avg_glucose_level", "bmi", "smoking_status"], "classifier"),
    ("mushrooms", "mushrooms.csv", "class", "mushrooms", ["cap_shape", "odor", "gill_size", "habitat"], "classifier"),
    ("insurance", "insurance.csv", "charges", "policy holders", ["age", "bmi", "children", "smoker"], "regressor"),
    ("loan_approval", "loan_data.csv", "Loan_Status", "applicants", ["ApplicantIncome", "LoanAmount", "Credit_History", "Property_Area"], "classifier"),
    ("rain_tomorrow", "weatherAUS.csv", "RainTomorrow", "days", ["MinTemp", "Humidity3pm", "Pressure9am", "WindGustDir"], "classifier"),
    ("flight_delays", "flights.csv", "ARRIVAL_DELAY", "flights", ["DISTANCE", "DEPARTURE_DELAY", "AIRLINE", "MONTH"], "regressor"),
    ("used_cars", "car_data.csv", "Selling_Price", "cars", ["Year", "Kms_Driven", "Fuel_Type", "Transmission"], "regressor"),
    ("employee_attrition", "HR-Employee-Attrition.csv", "Attrition", "employees", ["MonthlyIncome", "OverTime", "JobLevel", "YearsAtCompany"], "classifier"),
    ("breast_cancer", "load_breast_cancer", "target", "tumours", ["mean radius", "mean texture", "mean area", "mean smoothness"], "classifier"),
]


def load_code(file, var):
    if file.startswith("load_"):
        return f"from sklearn.datasets import {file}\n# load the dataset from scikit-learn\ndata = {file}(as_frame=True)\n{var} = data.frame"
    reader = {"xlsx": "read_excel", "json": "read_json"}.get(file.rsplit(".", 1)[-1], "read_csv")
    return f"# read the raw data file\n{var} = pd.{reader}('{file}')\n{var}.head()"


def corpus_notebook(i, domain, rng):
    name, file, target, things, feats, kind = domain
    var = "df" if i % 3 else name.split("_")[0]
    nb = Notebook(as_lists=i % 4 != 1)
    style = i % 6
    f0, f1, f2, f3 = feats

    def h(level, text):
        if style == 2 and level <= 2:
            # setext headings
            return text + "\n" + ("=" if level == 1 else "-") * len(text)
        return "#" * level + " " + text

    sub = 3 if style == 3 else 2  # style 3 skips a heading level
    title = name.replace("_", " ").title()

    if style == 5:
        # single cell carrying several headings
        nb.md(f"{h(1, title)}\n\nWe study {things}.\n\n{h(2, 'Loading the data')}\n\nThe data comes from a public file.")
    elif style == 4:
        nb.md(f"Notebook on {title.lower()} without a heading structure. We predict {target} for {things}.")
    else:
        nb.md(f"{h(1, title)}\n\nIn this notebook we predict **{target}** for {len(feats) * 250} {things}.")
        nb.md(h(sub, "Loading the data"))

    if i % 5 == 0:
        nb.raw("Source: public dataset, see the course page.")
    nb.code("import pandas as pd\nimport numpy as np\nimport matplotlib.pyplot as plt\nimport seaborn as sns")
    nb.code(load_code(file, var), [html_table(feats + [target], [[rng.randint(1, 90) for _ in range(5)] for _ in range(2)])])

    if style != 4:
        nb.md(h(sub, "Exploratory analysis") + f"\n\nHow are the {things} distributed? We look at summary statistics and plots.")
    nb.code(f"{var}.shape", [text_result(f"({rng.randint(300, 9000)}, {len(feats) + rng.randint(1, 9)})")])
    eda = [
        f"# summary statistics\n{var}.describe()",
        f"# distribution of {f0}\nsns.histplot({var}['{f0}'], bins=30)\nplt.show()",
        f"sns.countplot(x='{target}', data={var})\nplt.title('{target} counts')\nplt.show()",
        f"# correlation heatmap\nsns.heatmap({var}.corr(numeric_only=True), annot=True)\nplt.show()",
        f"sns.pairplot({var}[['{f0}', '{f1}', '{target}']])",
    ]
    for j, src in enumerate(rng.sample(eda, rng.randint(2, 4))):
        outs = [image((rng.randint(0, 255), rng.randint(0, 255), 120))] if "plt" in src or "pairplot" in src else [text_result("count 1000")]
        nb.code(src, outs)

    if style == 1:
        nb.md("```python\n# a fenced heading that must not count\n# Not a header\n```\nSome notes on the plots above.")

    if style != 4:
        nb.md(h(sub, "Cleaning") + "\n\nMissing values and duplicates.")
    nb.code(f"{var}.isnull().sum()", [text_result(f"{f0}  {rng.randint(0, 50)}\n{f1}  0")])
    clean = [
        f"# fill missing values with the median\n{var}['{f0}'] = {var}['{f0}'].fillna({var}['{f0}'].median())",
        f"{var} = {var}.dropna()\n{var} = {var}.drop_duplicates()",
        f"# drop an identifier column\n{var} = {var}.drop(columns=['id'], errors='ignore')",
    ]
    for src in rng.sample(clean, rng.randint(1, 3)):
        nb.code(src)

    if style not in (4,):
        nb.md(h(sub + 1 if style == 0 else sub, "Feature engineering"))
    nb.code(f"# one hot encode categorical features\n{var} = pd.get_dummies({var}, columns=['{f3}'], drop_first=True)")
    if rng.random() < 0.7:
        nb.code(
            f"from sklearn.preprocessing import StandardScaler\nscaler = StandardScaler()\n{var}[['{f1}', '{f2}']] = scaler.fit_transform({var}[['{f1}', '{f2}']])"
        )
    if rng.random() < 0.4:
        nb.code(f"# new ratio feature\n{var}['{f1}_per_{f2}'.lower()] = {var}['{f1}'] / ({var}['{f2}'] + 1)")

    if style == 5:
        nb.md(f"{h(2, 'Model')}\n\n{h(3, 'Training')}\nWe split the {things} and fit a model.")
    elif style != 4:
        nb.md(h(sub, "Modelling"))
    nb.code(
        f"from sklearn.model_selection import train_test_split\nX = {var}.drop('{target}', axis=1)\ny = {var}['{target}']\nX_train, X_test, y_train, y_test = train_test_split(X, y, test_size=0.2, random_state={i})"
    )
    if kind == "classifier":
        model_cls, module = rng.choice(
            [("RandomForestClassifier", "ensemble"), ("LogisticRegression", "linear_model"), ("GradientBoostingClassifier", "ensemble"), ("DecisionTreeClassifier", "tree")]
        )
    else:
        model_cls, module = rng.choice([("RandomForestRegressor", "ensemble"), ("LinearRegression", "linear_model"), ("GradientBoostingRegressor", "ensemble")])
    nb.code(
        f"from sklearn.{module} import {model_cls}\nmodel = {model_cls}()\nmodel.fit(X_train, y_train)",
        [text_result(f"{model_cls}()")],
    )
    nb.code("y_pred = model.predict(X_test)")
    if rng.random() < 0.5:
        nb.code(
            "from sklearn.model_selection import GridSearchCV\n# tune the hyperparameters\n"
            "grid = GridSearchCV(model, {'max_depth': [3, 5, None]}, cv=5)\ngrid.fit(X_train, y_train)\ngrid.best_params_",
            [text_result("{'max_depth': 5}")],
        )

    if style != 4:
        nb.md(h(sub, "Evaluation"))
    if kind == "classifier":
        nb.code(
            "from sklearn.metrics import accuracy_score, classification_report\nprint(accuracy_score(y_test, y_pred))\nprint(classification_report(y_test, y_pred))",
            [stream("0.84\n")],
        )
        if rng.random() < 0.6:
            nb.code(
                "from sklearn.metrics import confusion_matrix\nsns.heatmap(confusion_matrix(y_test, y_pred), annot=True)\nplt.show()",
                [image((30, 30, 200))],
            )
    else:
        nb.code(
            "from sklearn.metrics import mean_squared_error, r2_score\nprint(mean_squared_error(y_test, y_pred) ** 0.5)\nprint(r2_score(y_test, y_pred))",
            [stream("0.71\n")],
        )
    if rng.random() < 0.5:
        nb.code(
            "# error: the column was dropped above\n" + f"{var}['missing_column'].mean()",
            [{"output_type": "error", "ename": "KeyError", "evalue": "'missing_column'", "traceback": ["KeyError"]}],
        )
    nb.md(h(sub, "Conclusion") + f"\n\nThe model predicts {target} reasonably well. More data about {things} would help.")
    return nb


def edge_notebooks():
    out = {}
    nb = Notebook()
    out["empty"] = nb

    nb = Notebook()
    nb.md("# Notes only\n\nThis notebook has no code.\n\n## Ideas\n\n- try a bigger model")
    out["markdown_only"] = nb

    nb = Notebook(as_lists=False)
    nb.code("import pandas as pd\ndf = pd.read_csv('sales.csv')")
    nb.code("df.groupby('region')['revenue'].sum().plot(kind='bar')", [image((120, 120, 120))])
    nb.code("df.describe()")
    out["code_only"] = nb
    return out


# ---------------------------------------------------------------------------
# eval fixtures with hand-judged gold labels


def eval_fixtures():
    notebooks = {}

    nb = Notebook()
    nb.md("# Penguin species\n\n## Data")
    nb.code("import pandas as pd\nimport seaborn as sns")  # 1
    nb.code("# load the penguins dataset\npenguins = pd.read_csv('penguins.csv')")  # 2
    nb.md("## Exploration")
    nb.code("# summary statistics of the measurements\npenguins.describe()")  # 4
    nb.code("# histogram of flipper length\nsns.histplot(penguins['flipper_length_mm'])", [image()])  # 5
    nb.md("## Cleaning")
    nb.code("# drop rows with missing values\npenguins = penguins.dropna()")  # 7
    nb.md("## Model")
    nb.code(
        "from sklearn.model_selection import train_test_split\nX = penguins[['bill_length_mm', 'flipper_length_mm']]\ny = penguins['species']\nX_train, X_test, y_train, y_test = train_test_split(X, y)"
    )  # 9
    nb.code("from sklearn.neighbors import KNeighborsClassifier\n# train a k nearest neighbors classifier\nknn = KNeighborsClassifier()\nknn.fit(X_train, y_train)")  # 10
    nb.code("from sklearn.metrics import accuracy_score\n# accuracy of the classifier\naccuracy_score(y_test, knn.predict(X_test))")  # 11
    notebooks["penguins"] = (
        nb,
        {2: "data-source", 4: "eda", 5: "eda", 7: "data-cleaning", 9: "model-input", 10: "model-details", 11: "metrics", 1: "none"},
    )

    nb = Notebook(as_lists=False)
    nb.md("# Energy use")
    nb.code("import pandas as pd\n# read the building energy data\nenergy = pd.read_csv('energy.csv')")  # 1
    nb.code("# distribution of heating load\nenergy['heating_load'].plot(kind='hist')", [image()])  # 2
    nb.code("# scale features with a min max scaler\nfrom sklearn.preprocessing import MinMaxScaler\nscaled = MinMaxScaler().fit_transform(energy)")  # 3
    nb.code("from sklearn.linear_model import LinearRegression\n# fit a linear regression\nreg = LinearRegression().fit(scaled[:, :-1], scaled[:, -1])")  # 4
    nb.code("from sklearn.metrics import mean_squared_error\n# mean squared error of the regression\nmean_squared_error(scaled[:, -1], reg.predict(scaled[:, :-1]))")  # 5
    notebooks["energy"] = (
        nb,
        {1: "data-source", 2: "eda", 3: "feature-engineering", 4: "model-details", 5: "metrics"},
    )

    nb = Notebook()
    nb.md("# Churn quick look\n\n## Data")
    nb.code("import pandas as pd\n# load the churn data\nchurn = pd.read_csv('churn.csv')")  # 1
    nb.md("## Exploratory data analysis")
    nb.code("# summary statistics of churn\nchurn.describe()")  # 3
    nb.code("# count of churned customers\nchurn['Churn'].value_counts().plot(kind='bar')", [image()])  # 4
    nb.code("# correlation heatmap of numeric columns\nimport seaborn as sns\nsns.heatmap(churn.corr(numeric_only=True))", [image((10, 200, 10))])  # 5
    notebooks["churn"] = (nb, {1: "data-source", 3: "eda", 4: "eda", 5: "eda"})

    # the same churn notebook with the heatmap deliberately filed under feature
    # engineering: one of the three EDA bullets is wrong
    mislabeled = (nb, {1: "data-source", 3: "eda", 4: "eda", 5: "feature-engineering"})
    return notebooks, mislabeled


def write_gold(path, labels):
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {"labels": {str(k): v for k, v in sorted(labels.items())}}
    path.write_text(json.dumps(doc, indent=2) + "\n")


def main():
    wine_quality().dump(ROOT / "demo" / "wine_quality.ipynb")

    rng = random.Random(2023)
    for i, domain in enumerate(DOMAINS):
        corpus_notebook(i, domain, rng).dump(ROOT / "corpus" / f"{i:02d}_{domain[0]}.ipynb")
    for name, nb in edge_notebooks().items():
        nb.dump(ROOT / "corpus" / f"zz_{name}.ipynb")

    notebooks, mislabeled = eval_fixtures()
    for name, (nb, labels) in notebooks.items():
        nb.dump(ROOT / "eval" / "corpus" / f"{name}.ipynb")
        write_gold(ROOT / "eval" / "gold" / f"{name}.gold.json", labels)
    nb, labels = mislabeled
    nb.dump(ROOT / "eval-mislabeled" / "corpus" / "churn.ipynb")
    write_gold(ROOT / "eval-mislabeled" / "gold" / "churn.gold.json", labels)


if __name__ == "__main__":
    main()
