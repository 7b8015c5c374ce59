package calc;

public class Calc {
    public int add(int left, int right) {
        int sum = left + right;
        return sum;
    }

    public double add(double left, double right) {
        return left + right;
    }

    public int twice(int v) {
        return add(v, v);
    }
}
