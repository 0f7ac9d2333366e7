package demo;

import static org.junit.jupiter.api.Assertions.*;

import org.junit.jupiter.api.Test;

class RedundantPrintTest {
    @Test
    void adds() {
        Calculator calc = new Calculator();
        int left = 2;
        int right = 3;
        int sum = calc.add(left, right);
        System.out.println(sum);
        assertEquals(left + right, sum);
    }
}
